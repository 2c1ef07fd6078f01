#include "sramage/agesim.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "sramage/rng.hpp"

namespace fs = std::filesystem;

namespace sramage {

namespace {

// Sub-stream tags for deriving independent per-purpose generators.
constexpr uint64_t kStreamUsage = 0xF1;
constexpr uint64_t kStreamSharedProfile = 0xF2;
constexpr uint64_t kStreamPopulation = 0xF3;
constexpr uint64_t kStreamProfile = 0xF4;
constexpr uint64_t kStreamSamples = 0xF5;

constexpr double kTwoPi = 6.283185307179586476925287;

}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

CellPopulation sample_population(size_t num_bits, const PopulationPrior& prior, uint64_t seed) {
    if (num_bits == 0) throw InvalidArgumentError("sample_population: no bits");
    if (prior.noise_scale <= 0.0)
        throw InvalidArgumentError("sample_population: noise_scale must be positive");
    Rng rng(seed);
    CellPopulation pop;
    pop.noise_scale = prior.noise_scale;
    pop.skew.resize(num_bits);
    for (double& s : pop.skew) {
        const double sigma =
            rng.next_double() < prior.unstable_fraction ? prior.sigma_narrow : prior.sigma_wide;
        s = sigma * rng.normal();
    }
    return pop;
}

AgeingProfile sample_profile(size_t num_bits, const ProfilePrior& prior, uint64_t seed) {
    if (num_bits == 0) throw InvalidArgumentError("sample_profile: no bits");
    Rng rng(seed);
    AgeingProfile profile;
    profile.drift_rate = prior.drift_rate;
    profile.address_gradient = prior.address_gradient;
    profile.low_freq_components = prior.low_freq_components;
    profile.footprint.resize(num_bits, 0);
    const size_t stressed_limit = prior.lower_half_only ? num_bits / 2 : num_bits;
    for (size_t i = 0; i < stressed_limit; ++i) {
        const double u = rng.next_double();
        if (u < prior.fraction_positive)
            profile.footprint[i] = 1;
        else if (u < prior.fraction_positive + prior.fraction_negative)
            profile.footprint[i] = -1;
    }
    return profile;
}

double aged_skew(const CellPopulation& pop, const AgeingProfile& profile, double usage_months,
                 size_t bit) {
    const size_t n = pop.skew.size();
    const double x = n > 1 ? static_cast<double>(bit) / static_cast<double>(n - 1) : 0.0;
    double stress = profile.drift_rate * static_cast<double>(profile.footprint[bit]) +
                    profile.address_gradient * x;
    for (const auto& [bin, amplitude] : profile.low_freq_components)
        stress += amplitude * std::cos(kTwoPi * static_cast<double>(bin) *
                                       static_cast<double>(bit) / static_cast<double>(n));
    return pop.skew[bit] + usage_months * stress;
}

BitSampleSet simulate_device(const CellPopulation& pop, const AgeingProfile& profile,
                             double usage_months, size_t num_samples, uint64_t seed,
                             const std::string& device_id) {
    if (usage_months < 0.0) throw InvalidArgumentError("simulate_device: negative usage");
    if (num_samples == 0) throw InvalidArgumentError("simulate_device: no samples");
    if (pop.skew.size() != profile.footprint.size())
        throw InvalidArgumentError("simulate_device: population/profile size mismatch");

    const size_t num_bits = pop.skew.size();
    std::vector<double> p(num_bits);
    for (size_t i = 0; i < num_bits; ++i)
        p[i] = logistic(aged_skew(pop, profile, usage_months, i) / pop.noise_scale);

    BitSampleSet set;
    set.device_id = device_id;
    set.usage_months = usage_months;
    set.bits = BitMatrix(num_samples, num_bits);

    Rng rng(seed);
    for (size_t s = 0; s < num_samples; ++s) {
        auto words = set.bits.row_words(s);
        for (size_t i = 0; i < num_bits; ++i)
            if (rng.next_double() < p[i]) words[i / 64] |= uint64_t{1} << (i % 64);
    }
    set.validate();
    return set;
}

DeviceManifest generate_fleet(const FleetConfig& config, uint64_t seed,
                              const std::string& out_dir, const ReproStanza& repro) {
    if (config.num_devices == 0) throw InvalidArgumentError("generate_fleet: no devices");
    if (config.sram_bytes == 0) throw InvalidArgumentError("generate_fleet: zero sram_bytes");
    if (config.usage_list.empty() && !(config.usage_max >= config.usage_min))
        throw InvalidArgumentError("generate_fleet: bad usage range");

    const size_t num_bits = config.sram_bytes * 8;

    std::vector<double> usages(config.num_devices);
    if (!config.usage_list.empty()) {
        if (config.usage_list.size() != config.num_devices)
            throw InvalidArgumentError("generate_fleet: usage list length mismatch");
        usages = config.usage_list;
    } else {
        Rng rng(Rng::derive(seed, kStreamUsage));
        for (double& u : usages) u = rng.uniform_real(config.usage_min, config.usage_max);
    }

    AgeingProfile shared_profile;
    if (config.profile.shared_footprint)
        shared_profile = sample_profile(num_bits, config.profile,
                                        Rng::derive(seed, kStreamSharedProfile));

    fs::create_directories(fs::path(out_dir) / "dumps");

    DeviceManifest manifest;
    std::vector<uint8_t> bytes(config.sram_bytes);
    for (size_t d = 0; d < config.num_devices; ++d) {
        char name[32];
        std::snprintf(name, sizeof(name), "dev%04zu", d);

        const CellPopulation pop = sample_population(
            num_bits, config.population, Rng::derive(Rng::derive(seed, kStreamPopulation), d));
        const AgeingProfile profile =
            config.profile.shared_footprint
                ? shared_profile
                : sample_profile(num_bits, config.profile,
                                 Rng::derive(Rng::derive(seed, kStreamProfile), d));

        const BitSampleSet set =
            simulate_device(pop, profile, usages[d], config.num_samples,
                            Rng::derive(Rng::derive(seed, kStreamSamples), d), name);

        DeviceEntry entry;
        entry.device_id = name;
        entry.usage_months = usages[d];
        entry.sram_bytes = config.sram_bytes;

        const fs::path device_dir = fs::path(out_dir) / "dumps" / name;
        fs::create_directories(device_dir);
        for (size_t s = 0; s < config.num_samples; ++s) {
            char fname[32];
            std::snprintf(fname, sizeof(fname), "sample%05zu.bin", s);
            const fs::path dump_path = device_dir / fname;

            const auto words = set.bits.row_words(s);
            for (size_t b = 0; b < config.sram_bytes; ++b)
                bytes[b] = static_cast<uint8_t>(words[b / 8] >> (8 * (b % 8)));
            std::ofstream out(dump_path, std::ios::binary);
            if (!out) throw IoError("generate_fleet: cannot write dump: " + dump_path.string());
            out.write(reinterpret_cast<const char*>(bytes.data()),
                      static_cast<std::streamsize>(bytes.size()));
            if (!out) throw IoError("generate_fleet: write failed: " + dump_path.string());

            entry.dump_paths.push_back((fs::path("dumps") / name / fname).string());
        }
        manifest.entries.push_back(std::move(entry));
    }

    manifest.base_dir = out_dir;
    manifest.save((fs::path(out_dir) / "manifest.json").string(), repro);
    return manifest;
}

}
