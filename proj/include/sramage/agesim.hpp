#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sramage/bitcore.hpp"
#include "sramage/datasetio.hpp"

namespace sramage {

// Latent per-cell bias. A cell starts at 1 with probability
// logistic(skew / noise_scale); positive skew tends toward 1.
struct CellPopulation {
    std::vector<double> skew;
    double noise_scale = 1.0;
};

// Symmetric two-component prior: a wide component yields mostly-stable
// cells, a narrow component leaves a minority of near-coin-flip cells.
struct PopulationPrior {
    double unstable_fraction = 0.10;
    double sigma_wide = 8.0;
    double sigma_narrow = 0.5;
    double noise_scale = 1.0;
};

// Stress accumulated per month of usage. footprint gives the stress
// direction per cell (+1 drifts the startup value toward 1); the address
// gradient adds drift linear in the normalized address; low-frequency
// components add cosine patterns over the address space.
struct AgeingProfile {
    std::vector<int8_t> footprint;  // entries in {-1, 0, +1}
    double drift_rate = 0.0;        // skew units per month per footprint unit
    double address_gradient = 0.0;  // skew units per month at the top address
    std::vector<std::pair<size_t, double>> low_freq_components;  // (bin, skew units/month)
};

// Fleet-level generation knobs.
struct ProfilePrior {
    double fraction_positive = 0.45;  // cells stressed toward 1
    double fraction_negative = 0.15;  // cells stressed toward 0
    double drift_rate = 0.0;
    double address_gradient = 0.0;
    std::vector<std::pair<size_t, double>> low_freq_components;
    bool shared_footprint = true;  // one footprint for the whole fleet
    bool lower_half_only = false;  // restrict stress to the lower address half
};

struct FleetConfig {
    size_t num_devices = 20;
    size_t num_samples = 200;
    size_t sram_bytes = 2048;
    double usage_min = 0.0;
    double usage_max = 18.0;
    std::vector<double> usage_list;  // overrides the uniform range when set
    PopulationPrior population;
    ProfilePrior profile;
};

CellPopulation sample_population(size_t num_bits, const PopulationPrior& prior, uint64_t seed);

AgeingProfile sample_profile(size_t num_bits, const ProfilePrior& prior, uint64_t seed);

// Aged latent skew for one cell (exposed for expectation oracles).
double aged_skew(const CellPopulation& pop, const AgeingProfile& profile, double usage_months,
                 size_t bit);

double logistic(double x);

// Draws num_samples independent startup patterns from the aged cell
// distribution. Reproducible for a fixed seed.
BitSampleSet simulate_device(const CellPopulation& pop, const AgeingProfile& profile,
                             double usage_months, size_t num_samples, uint64_t seed,
                             const std::string& device_id = "device");

// Generates a labelled fleet on disk: dumps plus manifest in the datasetio
// format. Returns the manifest (already saved to out_dir/manifest.json).
DeviceManifest generate_fleet(const FleetConfig& config, uint64_t seed,
                              const std::string& out_dir, const ReproStanza& repro);

}
