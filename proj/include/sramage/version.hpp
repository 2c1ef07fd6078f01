#pragma once

namespace sramage {

inline constexpr const char* kToolkitVersion = "0.1.0";

}
