#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sramage/bitcore.hpp"
#include "sramage/matrix.hpp"

namespace sramage {

// Extraction parameters that must travel with the selected frequencies so
// that train-time and evaluate-time features are computed identically.
struct SchemaOptions {
    size_t num_bits = 0;
    size_t group_size = 10;
    size_t block_bytes = 1024;
    bool pct1s_per_device = false;  // default: per group
    bool spearman_per_bit = false;  // default: blockwise P1 vs block index
};

// Named feature layout: the six base features followed by the spectrum
// amplitudes at the frozen frequency bins.
struct FeatureSchema {
    static constexpr size_t kNumBaseFeatures = 6;

    std::vector<std::string> names;
    std::vector<size_t> selected_freq_indices;
    SchemaOptions options;

    size_t num_features() const { return names.size(); }

    // Structural checks: name count matches 6 + |indices|, indices unique
    // and within [0, num_bits/2]. Monotonicity is a property of fitted
    // schemas, not a load-time requirement.
    void validate() const;

    std::string to_json_string() const;
    static FeatureSchema from_json_string(const std::string& text);

    void save(const std::string& path) const;
    static FeatureSchema load(const std::string& path);

    // FNV-1a over the canonical serialization; stored in trained models.
    uint64_t hash() const;
};

struct FeatureVector {
    std::string device_id;
    double usage_months = 0.0;
    std::vector<double> values;
};

struct PctOnesStats {
    double max = 0.0;
    double mean = 0.0;
    double min = 0.0;
};

struct AddressRegression {
    double intercept = 0.0;
    double slope = 0.0;
    double spearman = 0.0;
    bool spearman_defined = true;
};

struct ExtractStats {
    size_t undefined_spearman = 0;
};

// Fraction of ones per raw sample, reduced to (max, mean, min).
PctOnesStats pct_ones_stats(const BitSampleSet& samples);
PctOnesStats pct_ones_stats_range(const BitSampleSet& samples, size_t first, size_t count);

// Mean P1 per consecutive block of 8*block_bytes bits. B must divide evenly.
std::vector<double> blockwise_p1(const P1Map& p1, size_t block_bytes);

// OLS of P1 against the bit address normalized to [0,1], plus the Spearman
// correlation of blockwise P1 against block index (or per-bit P1 against
// address when per_bit). An undefined correlation (constant input) comes
// back with spearman_defined = false and spearman = 0.
AddressRegression p1_address_regression(const P1Map& p1, size_t block_bytes = 1024,
                                        bool per_bit = false);

// One-sided amplitude spectrum of the mean-removed P1 vector: |DFT| at
// bins 0 .. B/2 (unnormalized convention).
std::vector<double> p1_spectrum(const P1Map& p1);

// Ranks every non-DC frequency bin by |spearman(amplitude, usage)| over the
// training rows and keeps the k best (ties to the lower bin). The returned
// schema has its indices sorted ascending and is frozen thereafter.
FeatureSchema fit_frequency_selection(const std::vector<std::vector<double>>& train_spectra,
                                      const std::vector<double>& train_usages, size_t k,
                                      const SchemaOptions& options);

// Same selection from a precomputed |correlation| per bin (bin 0 ignored).
// Used by the streaming driver that cannot hold all spectra at once.
FeatureSchema schema_from_bin_correlations(const std::vector<double>& abs_corr_by_bin,
                                           size_t k, const SchemaOptions& options);

// |spearman(column, usages)| per column of a rows-by-bins matrix;
// undefined correlations map to 0.
std::vector<double> column_usage_correlations(const Matrix& columns,
                                              const std::vector<double>& usages);

// One FeatureVector per consecutive sample group of group_size (group_p1
// semantics). The spectrum features are read at schema.selected_freq_indices
// in schema order.
std::vector<FeatureVector> extract_features(const BitSampleSet& samples,
                                            const FeatureSchema& schema, size_t group_size,
                                            ExtractStats* stats = nullptr);

}
