#include "sramage/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <json.hpp>

#include "sramage/fft.hpp"
#include "sramage/metrics.hpp"

namespace sramage {

void FeatureSchema::validate() const {
    if (options.num_bits == 0 || options.num_bits % 8 != 0)
        throw FormatError("FeatureSchema: num_bits must be a positive multiple of 8");
    if (options.group_size == 0)
        throw FormatError("FeatureSchema: group_size must be positive");
    if (names.size() != kNumBaseFeatures + selected_freq_indices.size())
        throw FormatError("FeatureSchema: name count does not match feature layout");
    std::set<size_t> seen;
    for (size_t idx : selected_freq_indices) {
        if (idx > options.num_bits / 2)
            throw FormatError("FeatureSchema: frequency index out of range");
        if (!seen.insert(idx).second)
            throw FormatError("FeatureSchema: duplicate frequency index");
    }
}

namespace {

std::vector<std::string> make_feature_names(size_t k) {
    std::vector<std::string> names = {"pct1s_max",          "pct1s_mean",
                                      "pct1s_min",          "p1_addr_intercept",
                                      "p1_addr_slope",      "p1_addr_spearman"};
    names.reserve(FeatureSchema::kNumBaseFeatures + k);
    for (size_t i = 0; i < k; ++i) names.push_back("spectrum_" + std::to_string(i));
    return names;
}

nlohmann::json schema_to_json(const FeatureSchema& s) {
    return nlohmann::json{{"format", "sramage-feature-schema"},
                          {"version", 1},
                          {"num_bits", s.options.num_bits},
                          {"group_size", s.options.group_size},
                          {"block_bytes", s.options.block_bytes},
                          {"pct1s_per_device", s.options.pct1s_per_device},
                          {"spearman_per_bit", s.options.spearman_per_bit},
                          {"names", s.names},
                          {"selected_freq_indices", s.selected_freq_indices}};
}

}

std::string FeatureSchema::to_json_string() const {
    return schema_to_json(*this).dump(2);
}

FeatureSchema FeatureSchema::from_json_string(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("FeatureSchema: invalid JSON: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "sramage-feature-schema")
            throw FormatError("FeatureSchema: unexpected document format");
        if (j.at("version").get<int>() != 1)
            throw FormatError("FeatureSchema: unsupported version");
        FeatureSchema s;
        s.options.num_bits = j.at("num_bits").get<size_t>();
        s.options.group_size = j.at("group_size").get<size_t>();
        s.options.block_bytes = j.at("block_bytes").get<size_t>();
        s.options.pct1s_per_device = j.at("pct1s_per_device").get<bool>();
        s.options.spearman_per_bit = j.at("spearman_per_bit").get<bool>();
        s.names = j.at("names").get<std::vector<std::string>>();
        s.selected_freq_indices = j.at("selected_freq_indices").get<std::vector<size_t>>();
        s.validate();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("FeatureSchema: missing or mistyped field: ") + e.what());
    }
}

void FeatureSchema::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("FeatureSchema: cannot open for writing: " + path);
    out << to_json_string() << "\n";
    if (!out) throw IoError("FeatureSchema: write failed: " + path);
}

FeatureSchema FeatureSchema::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("FeatureSchema: cannot open: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_string(text);
}

uint64_t FeatureSchema::hash() const {
    const std::string text = schema_to_json(*this).dump();
    uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

PctOnesStats pct_ones_stats(const BitSampleSet& samples) {
    return pct_ones_stats_range(samples, 0, samples.num_samples());
}

PctOnesStats pct_ones_stats_range(const BitSampleSet& samples, size_t first, size_t count) {
    if (count == 0) throw InvalidArgumentError("pct_ones_stats: empty sample range");
    if (first + count > samples.num_samples())
        throw InvalidArgumentError("pct_ones_stats: sample range out of bounds");

    const double inv_bits = 1.0 / static_cast<double>(samples.num_bits());
    PctOnesStats stats;
    stats.max = 0.0;
    stats.min = 1.0;
    double total = 0.0;
    for (size_t row = first; row < first + count; ++row) {
        const double frac = static_cast<double>(samples.bits.popcount_row(row)) * inv_bits;
        stats.max = std::max(stats.max, frac);
        stats.min = std::min(stats.min, frac);
        total += frac;
    }
    stats.mean = total / static_cast<double>(count);
    return stats;
}

std::vector<double> blockwise_p1(const P1Map& p1, size_t block_bytes) {
    if (block_bytes == 0) throw InvalidArgumentError("blockwise_p1: block_bytes must be positive");
    const size_t block_bits = block_bytes * 8;
    if (p1.size() % block_bits != 0)
        throw InvalidArgumentError("blockwise_p1: bit count not divisible by block size");

    const size_t num_blocks = p1.size() / block_bits;
    std::vector<double> means(num_blocks);
    for (size_t b = 0; b < num_blocks; ++b) {
        // Counts are integers; sum them exactly before dividing once.
        uint64_t count_sum = 0;
        for (size_t i = b * block_bits; i < (b + 1) * block_bits; ++i) count_sum += p1.count(i);
        means[b] = static_cast<double>(count_sum) /
                   (static_cast<double>(p1.num_samples_used()) * static_cast<double>(block_bits));
    }
    return means;
}

AddressRegression p1_address_regression(const P1Map& p1, size_t block_bytes, bool per_bit) {
    const size_t n = p1.size();
    if (n < 2) throw InvalidArgumentError("p1_address_regression: need at least 2 bits");

    // OLS of P1 against address normalized to [0,1]. With x_i = i/(B-1),
    // sums over x have closed forms; only the y sums need a pass.
    const double nn = static_cast<double>(n);
    const double mean_x = 0.5;
    // var_x * n = sum (x - 0.5)^2 for x = i/(B-1), i = 0..n-1
    //           = (n(n+1)) / (12(n-1))  -- exact for this grid
    const double sxx = nn * (nn + 1.0) / (12.0 * (nn - 1.0));
    double mean_y = 0.0;
    for (size_t i = 0; i < n; ++i) mean_y += p1.value(i);
    mean_y /= nn;
    double sxy = 0.0;
    const double inv_last = 1.0 / (nn - 1.0);
    for (size_t i = 0; i < n; ++i)
        sxy += (static_cast<double>(i) * inv_last - mean_x) * (p1.value(i) - mean_y);

    AddressRegression out;
    out.slope = sxy / sxx;
    out.intercept = mean_y - out.slope * mean_x;

    std::vector<double> ys;
    if (per_bit) {
        ys = p1.values();
    } else {
        ys = blockwise_p1(p1, block_bytes);
    }
    std::vector<double> xs(ys.size());
    std::iota(xs.begin(), xs.end(), 0.0);
    try {
        out.spearman = spearman_r(xs, ys);
        out.spearman_defined = true;
    } catch (const DegenerateDataError&) {
        out.spearman = 0.0;
        out.spearman_defined = false;
    }
    return out;
}

std::vector<double> p1_spectrum(const P1Map& p1) {
    const size_t n = p1.size();
    if (n < 2) throw InvalidArgumentError("p1_spectrum: need at least 2 bits");

    std::vector<double> centered(n);
    double mean = 0.0;
    for (size_t i = 0; i < n; ++i) mean += p1.value(i);
    mean /= static_cast<double>(n);
    for (size_t i = 0; i < n; ++i) centered[i] = p1.value(i) - mean;

    const auto freq = dft_forward_real(centered);
    std::vector<double> amplitude(n / 2 + 1);
    for (size_t k = 0; k < amplitude.size(); ++k) amplitude[k] = std::abs(freq[k]);
    return amplitude;
}

std::vector<double> column_usage_correlations(const Matrix& columns,
                                              const std::vector<double>& usages) {
    if (columns.rows() != usages.size())
        throw InvalidArgumentError("column_usage_correlations: row count mismatch");
    std::vector<double> corr(columns.cols(), 0.0);
    std::vector<double> scratch(columns.rows());
    for (size_t c = 0; c < columns.cols(); ++c) {
        for (size_t r = 0; r < columns.rows(); ++r) scratch[r] = columns.at(r, c);
        try {
            corr[c] = std::abs(spearman_r(scratch, usages));
        } catch (const DegenerateDataError&) {
            corr[c] = 0.0;
        }
    }
    return corr;
}

FeatureSchema schema_from_bin_correlations(const std::vector<double>& abs_corr_by_bin,
                                           size_t k, const SchemaOptions& options) {
    if (k == 0) throw InvalidArgumentError("frequency selection: k must be positive");
    if (abs_corr_by_bin.size() < 2 || abs_corr_by_bin.size() - 1 < k)
        throw InvalidArgumentError("frequency selection: fewer candidate bins than k");

    // DC (bin 0) is excluded; pct1s_mean already carries the mean level.
    std::vector<size_t> bins(abs_corr_by_bin.size() - 1);
    std::iota(bins.begin(), bins.end(), size_t{1});
    std::stable_sort(bins.begin(), bins.end(), [&](size_t a, size_t b) {
        if (abs_corr_by_bin[a] != abs_corr_by_bin[b])
            return abs_corr_by_bin[a] > abs_corr_by_bin[b];
        return a < b;
    });
    bins.resize(k);
    std::sort(bins.begin(), bins.end());

    FeatureSchema schema;
    schema.options = options;
    schema.selected_freq_indices = std::move(bins);
    schema.names = make_feature_names(k);
    schema.validate();
    return schema;
}

FeatureSchema fit_frequency_selection(const std::vector<std::vector<double>>& train_spectra,
                                      const std::vector<double>& train_usages, size_t k,
                                      const SchemaOptions& options) {
    if (train_spectra.empty())
        throw InvalidArgumentError("fit_frequency_selection: no training spectra");
    if (train_spectra.size() != train_usages.size())
        throw InvalidArgumentError("fit_frequency_selection: spectra/usage count mismatch");
    const double first = train_usages.front();
    if (std::all_of(train_usages.begin(), train_usages.end(),
                    [&](double u) { return u == first; }))
        throw InvalidArgumentError("fit_frequency_selection: need >= 2 distinct usage values");

    const size_t bins = train_spectra.front().size();
    Matrix cols(train_spectra.size(), bins);
    for (size_t r = 0; r < train_spectra.size(); ++r) {
        if (train_spectra[r].size() != bins)
            throw InvalidArgumentError("fit_frequency_selection: inconsistent spectrum lengths");
        auto row = cols.row(r);
        for (size_t c = 0; c < bins; ++c) row[c] = train_spectra[r][c];
    }
    const std::vector<double> corr = column_usage_correlations(cols, train_usages);
    return schema_from_bin_correlations(corr, k, options);
}

std::vector<FeatureVector> extract_features(const BitSampleSet& samples,
                                            const FeatureSchema& schema, size_t group_size,
                                            ExtractStats* stats) {
    schema.validate();
    if (schema.options.num_bits != samples.num_bits())
        throw SchemaMismatchError("extract_features: schema fitted for a different SRAM size");

    const size_t num_groups = samples.num_samples() / group_size;
    if (group_size == 0 || num_groups == 0)
        throw InvalidArgumentError("extract_features: group_size invalid for sample count");

    PctOnesStats device_pct;
    if (schema.options.pct1s_per_device) device_pct = pct_ones_stats(samples);

    std::vector<FeatureVector> rows;
    rows.reserve(num_groups);
    for (size_t g = 0; g < num_groups; ++g) {
        const size_t first = g * group_size;
        const P1Map p1 = compute_p1_range(samples, first, group_size);

        const PctOnesStats pct = schema.options.pct1s_per_device
                                     ? device_pct
                                     : pct_ones_stats_range(samples, first, group_size);
        const AddressRegression reg = p1_address_regression(
            p1, schema.options.block_bytes, schema.options.spearman_per_bit);
        if (!reg.spearman_defined && stats) stats->undefined_spearman++;

        const std::vector<double> amplitude = p1_spectrum(p1);

        FeatureVector fv;
        fv.device_id = samples.device_id;
        fv.usage_months = samples.usage_months;
        fv.values.reserve(schema.num_features());
        fv.values = {pct.max, pct.mean, pct.min, reg.intercept, reg.slope, reg.spearman};
        for (size_t idx : schema.selected_freq_indices) fv.values.push_back(amplitude[idx]);
        rows.push_back(std::move(fv));
    }
    return rows;
}

}
