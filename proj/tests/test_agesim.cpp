#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "sramage/agesim.hpp"
#include "sramage/features.hpp"
#include "sramage/metrics.hpp"
#include "sramage/rng.hpp"

using namespace sramage;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("sramage_sim_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

AgeingProfile zero_profile(size_t bits) {
    AgeingProfile p;
    p.footprint.assign(bits, 0);
    return p;
}

}

TEST_CASE("simulate_device basics") {
    const size_t bits = 4096;
    PopulationPrior prior;
    const CellPopulation pop = sample_population(bits, prior, 11);

    SUBCASE("usage 0 with a symmetric prior gives mean pct1s near 0.5") {
        const BitSampleSet set = simulate_device(pop, zero_profile(bits), 0.0, 50, 3);
        const PctOnesStats pct = pct_ones_stats(set);
        CHECK(pct.mean > 0.45);
        CHECK(pct.mean < 0.55);
    }

    SUBCASE("zero drift makes the distribution usage-independent") {
        const AgeingProfile p = zero_profile(bits);
        const BitSampleSet young = simulate_device(pop, p, 0.0, 40, 5);
        const BitSampleSet old = simulate_device(pop, p, 18.0, 40, 5);
        // same seed, same per-cell probabilities: identical draws
        for (size_t b = 0; b < bits; ++b)
            CHECK(young.bits.get(3, b) == old.bits.get(3, b));
    }

    SUBCASE("strong positive drift saturates P1 at 1 and instability at 0") {
        AgeingProfile p = zero_profile(bits);
        p.footprint.assign(bits, 1);
        p.drift_rate = 10.0;  // 18 months * 10 >> any prior skew
        const BitSampleSet set = simulate_device(pop, p, 18.0, 100, 7);
        const P1Map p1 = compute_p1(set);
        const InstabilityMap inst = compute_instability(p1);
        for (size_t b = 0; b < bits; ++b) {
            CHECK(p1.value(b) == 1.0);
            CHECK(inst.values[b] == 0.0);
        }
    }

    SUBCASE("determinism: identical seeds give identical dumps") {
        const BitSampleSet a = simulate_device(pop, zero_profile(bits), 3.0, 10, 9);
        const BitSampleSet b = simulate_device(pop, zero_profile(bits), 3.0, 10, 9);
        for (size_t s = 0; s < 10; ++s)
            for (size_t w = 0; w < a.bits.words_per_row(); ++w)
                CHECK(a.bits.row_words(s)[w] == b.bits.row_words(s)[w]);
    }
}

TEST_CASE("expected P1 matches the logistic model within binomial bounds") {
    const size_t bits = 512;
    PopulationPrior prior;
    prior.unstable_fraction = 0.3;
    const CellPopulation pop = sample_population(bits, prior, 21);
    AgeingProfile profile = zero_profile(bits);
    profile.footprint.assign(bits, 1);
    profile.drift_rate = 0.05;

    const double usage = 7.0;
    const size_t n = 1000;
    const BitSampleSet set = simulate_device(pop, profile, usage, n, 23);
    const P1Map p1 = compute_p1(set);

    size_t outside = 0;
    for (size_t b = 0; b < bits; ++b) {
        const double expected = logistic(aged_skew(pop, profile, usage, b) / pop.noise_scale);
        // 5-sigma envelope plus a count-level allowance for the Poisson
        // regime at extreme probabilities, where the normal sigma understates
        // the tail.
        const double sigma = std::sqrt(expected * (1.0 - expected) / n);
        if (std::fabs(p1.value(b) - expected) > 5.0 * sigma + 8.0 / n) outside++;
    }
    CHECK(outside == 0);
}

TEST_CASE("strongly skewed cells are stable in finite samples") {
    // At N = 1000 draws the flip probability must sit well below 1/(N*B)
    // before zero instability is the overwhelmingly probable outcome;
    // |skew|/noise = 18 gives ~1.5e-8 per draw.
    const size_t bits = 256;
    CellPopulation pop;
    pop.noise_scale = 1.0;
    pop.skew.assign(bits, 18.0);
    for (size_t b = 0; b < bits; b += 2) pop.skew[b] = -18.0;
    const BitSampleSet set = simulate_device(pop, zero_profile(bits), 0.0, 1000, 29);
    const InstabilityMap inst = compute_instability(compute_p1(set));
    for (size_t b = 0; b < bits; ++b) CHECK(inst.values[b] == 0.0);
}

TEST_CASE("footprint on the lower half reproduces the used/unused boundary") {
    const size_t bits = 8192;
    PopulationPrior prior;
    prior.unstable_fraction = 0.4;  // plenty of unstable cells to stabilize
    const CellPopulation pop = sample_population(bits, prior, 31);

    ProfilePrior pp;
    pp.fraction_positive = 0.5;
    pp.fraction_negative = 0.5;  // stress everything that is selected
    pp.drift_rate = 0.4;
    pp.lower_half_only = true;
    const AgeingProfile profile = sample_profile(bits, pp, 33);
    for (size_t b = bits / 2; b < bits; ++b) CHECK(profile.footprint[b] == 0);

    const BitSampleSet aged = simulate_device(pop, profile, 18.0, 200, 35);
    const InstabilityMap inst = compute_instability(compute_p1(aged));
    double lower = 0, upper = 0;
    for (size_t b = 0; b < bits / 2; ++b) lower += inst.values[b];
    for (size_t b = bits / 2; b < bits; ++b) upper += inst.values[b];
    CHECK(lower / (bits / 2) < upper / (bits / 2));
}

TEST_CASE("generate_fleet writes a loadable manifest with unique ids") {
    TempDir dir;
    FleetConfig config;
    config.num_devices = 6;
    config.num_samples = 8;
    config.sram_bytes = 64;
    config.usage_min = 0.0;
    config.usage_max = 18.0;
    const DeviceManifest manifest =
        generate_fleet(config, 41, dir.path.string(), ReproStanza{41, "h", "0.1.0"});
    CHECK(manifest.num_devices() == 6);

    const DeviceManifest loaded = DeviceManifest::load((dir.path / "manifest.json").string());
    CHECK(loaded.num_devices() == 6);
    const auto sets = ingest(loaded);
    CHECK(sets.size() == 6);
    for (const auto& s : sets) {
        CHECK(s.num_samples() == 8);
        CHECK(s.num_bits() == 64 * 8);
    }

    SUBCASE("re-running with the same seed writes identical dumps") {
        TempDir dir2;
        generate_fleet(config, 41, dir2.path.string(), ReproStanza{41, "h", "0.1.0"});
        for (const auto& entry : manifest.entries) {
            for (const auto& rel : entry.dump_paths) {
                std::ifstream a(dir.path / rel, std::ios::binary);
                std::ifstream b(dir2.path / rel, std::ios::binary);
                const std::string ca((std::istreambuf_iterator<char>(a)),
                                     std::istreambuf_iterator<char>());
                const std::string cb((std::istreambuf_iterator<char>(b)),
                                     std::istreambuf_iterator<char>());
                CHECK(ca == cb);
                CHECK(ca.size() == 64);
            }
        }
    }
}

TEST_CASE("strong drift makes mean pct1s rank-correlate with usage") {
    TempDir dir;
    FleetConfig config;
    config.num_devices = 12;
    config.num_samples = 20;
    config.sram_bytes = 512;
    config.usage_min = 1.0;
    config.usage_max = 18.0;
    config.profile.drift_rate = 0.5;
    config.profile.fraction_positive = 0.5;
    config.profile.fraction_negative = 0.1;
    const DeviceManifest manifest =
        generate_fleet(config, 47, dir.path.string(), ReproStanza{47, "h", "0.1.0"});

    std::vector<double> usages, means;
    for_each_device(manifest, [&](const BitSampleSet& set) {
        usages.push_back(set.usage_months);
        means.push_back(pct_ones_stats(set).mean);
    });
    CHECK(spearman_r(means, usages) > 0.9);
}
