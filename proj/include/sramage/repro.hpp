#pragma once

#include <cstdint>
#include <string>

#include "sramage/version.hpp"

namespace sramage {

// Reproducibility stanza written into every artifact: the seed that drove
// the run, a hash of the effective configuration and the toolkit version.
// Deliberately contains no timestamps so identical runs emit identical bytes.
struct ReproStanza {
    uint64_t seed = 0;
    std::string config_hash;
    std::string toolkit_version = kToolkitVersion;

    // "# sramage seed=... config=... version=..." comment for text artifacts.
    std::string comment_line() const {
        return "# sramage seed=" + std::to_string(seed) + " config=" + config_hash +
               " version=" + toolkit_version;
    }
};

}
