#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "sramage/features.hpp"
#include "sramage/rng.hpp"

using namespace sramage;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

BitSampleSet make_set(const std::vector<std::vector<int>>& rows) {
    BitSampleSet set;
    set.device_id = "t";
    set.bits = BitMatrix(rows.size(), rows[0].size());
    for (size_t r = 0; r < rows.size(); ++r)
        for (size_t c = 0; c < rows[0].size(); ++c) set.bits.set(r, c, rows[r][c] != 0);
    return set;
}

// Constructs a P1Map whose values form v_i = counts_i / denom exactly.
P1Map p1_from_counts(std::vector<uint32_t> counts, uint32_t denom) {
    return P1Map(std::move(counts), denom);
}

SchemaOptions small_options(size_t num_bits, size_t block_bytes = 1) {
    SchemaOptions o;
    o.num_bits = num_bits;
    o.group_size = 2;
    o.block_bytes = block_bytes;
    return o;
}

}

TEST_CASE("pct_ones_stats basic cases") {
    SUBCASE("all ones") {
        const std::vector<std::vector<int>> rows(3, std::vector<int>(8, 1));
        const auto s = pct_ones_stats(make_set(rows));
        CHECK(s.max == 1.0);
        CHECK(s.mean == 1.0);
        CHECK(s.min == 1.0);
    }
    SUBCASE("two samples with fractions 0.4 and 0.6") {
        std::vector<std::vector<int>> rows(2, std::vector<int>(10 * 8, 0));
        for (size_t b = 0; b < 32; ++b) rows[0][b] = 1;  // 32/80 = 0.4
        for (size_t b = 0; b < 48; ++b) rows[1][b] = 1;  // 48/80 = 0.6
        const auto s = pct_ones_stats(make_set(rows));
        CHECK(s.max == doctest::Approx(0.6));
        CHECK(s.mean == doctest::Approx(0.5));
        CHECK(s.min == doctest::Approx(0.4));
    }
    SUBCASE("single 8-bit sample 11000000") {
        const auto s = pct_ones_stats(make_set({{1, 1, 0, 0, 0, 0, 0, 0}}));
        CHECK(s.max == doctest::Approx(0.25));
        CHECK(s.mean == doctest::Approx(0.25));
        CHECK(s.min == doctest::Approx(0.25));
    }
}

TEST_CASE("blockwise_p1") {
    SUBCASE("handcrafted 16-bit map, 1-byte blocks") {
        std::vector<uint32_t> counts(16, 0);
        for (size_t i = 8; i < 16; ++i) counts[i] = 4;
        const auto means = blockwise_p1(p1_from_counts(counts, 4), 1);
        REQUIRE(means.size() == 2);
        CHECK(means[0] == 0.0);
        CHECK(means[1] == 1.0);
    }
    SUBCASE("constant map") {
        const auto means = blockwise_p1(p1_from_counts(std::vector<uint32_t>(64, 2), 4), 2);
        for (double m : means) CHECK(m == doctest::Approx(0.5));
    }
    SUBCASE("indivisible size is rejected") {
        CHECK_THROWS_AS(blockwise_p1(p1_from_counts(std::vector<uint32_t>(24, 0), 4), 2),
                        InvalidArgumentError);
    }
    SUBCASE("block means average to the global mean") {
        Rng rng(3);
        std::vector<uint32_t> counts(64);
        for (auto& c : counts) c = static_cast<uint32_t>(rng.below(11));
        const P1Map p1 = p1_from_counts(counts, 10);
        const auto means = blockwise_p1(p1, 1);
        const double avg =
            std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(means.size());
        CHECK(avg == doctest::Approx(p1.mean()).epsilon(1e-12));
    }
}

TEST_CASE("p1_address_regression") {
    SUBCASE("constant map: intercept 0.5, slope 0, undefined correlation") {
        const auto reg = p1_address_regression(p1_from_counts(std::vector<uint32_t>(64, 2), 4), 1);
        CHECK(reg.intercept == doctest::Approx(0.5));
        CHECK(reg.slope == doctest::Approx(0.0));
        CHECK_FALSE(reg.spearman_defined);
        CHECK(reg.spearman == 0.0);
    }
    SUBCASE("linear ramp: slope 1, intercept 0, spearman 1") {
        // values i/(B-1) built exactly with denom B-1
        const size_t n = 16;
        std::vector<uint32_t> counts(n);
        std::iota(counts.begin(), counts.end(), uint32_t{0});
        const auto reg = p1_address_regression(p1_from_counts(counts, n - 1), 1);
        CHECK(reg.slope == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(reg.intercept == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
        CHECK(reg.spearman == doctest::Approx(1.0));
        CHECK(reg.spearman_defined);
    }
    SUBCASE("per-bit flag matches blockwise on monotone data") {
        const size_t n = 32;
        std::vector<uint32_t> counts(n);
        std::iota(counts.begin(), counts.end(), uint32_t{0});
        const auto per_bit = p1_address_regression(p1_from_counts(counts, n), 1, true);
        CHECK(per_bit.spearman == doctest::Approx(1.0));
    }
}

TEST_CASE("p1_spectrum") {
    SUBCASE("constant map has zero non-DC amplitude") {
        const auto amp = p1_spectrum(p1_from_counts(std::vector<uint32_t>(64, 3), 4));
        REQUIRE(amp.size() == 33);
        for (double a : amp) CHECK(a == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    }
    SUBCASE("injected cosine recovers its bin with amplitude 0.05 B") {
        const size_t n = 256, bin = 9;
        // p1 = 0.5 + 0.1 cos(2 pi bin i / n), quantized over 1000 samples
        std::vector<uint32_t> counts(n);
        for (size_t i = 0; i < n; ++i) {
            const double p =
                0.5 + 0.1 * std::cos(2.0 * kPi * static_cast<double>(bin) *
                                     static_cast<double>(i) / static_cast<double>(n));
            counts[i] = static_cast<uint32_t>(std::lround(p * 1000));
        }
        const auto amp = p1_spectrum(p1_from_counts(counts, 1000));
        size_t best = 1;
        for (size_t k = 1; k < amp.size(); ++k)
            if (amp[k] > amp[best]) best = k;
        CHECK(best == bin);
        CHECK(amp[bin] == doctest::Approx(0.05 * n).epsilon(2e-2));  // quantization noise
    }
    SUBCASE("parseval identity") {
        Rng rng(17);
        const size_t n = 128;
        std::vector<uint32_t> counts(n);
        for (auto& c : counts) c = static_cast<uint32_t>(rng.below(101));
        const P1Map p1 = p1_from_counts(counts, 100);
        const auto amp = p1_spectrum(p1);
        const double mean = p1.mean();
        double time_energy = 0;
        for (size_t i = 0; i < n; ++i)
            time_energy += (p1.value(i) - mean) * (p1.value(i) - mean);
        // fold the one-sided spectrum back to total energy
        double freq_energy = amp[0] * amp[0] + amp[n / 2] * amp[n / 2];
        for (size_t k = 1; k < n / 2; ++k) freq_energy += 2.0 * amp[k] * amp[k];
        CHECK(freq_energy == doctest::Approx(n * time_energy).epsilon(1e-9));
    }
}

TEST_CASE("fit_frequency_selection") {
    SUBCASE("usage-coupled bin ranks first") {
        // bin 3 amplitude equals usage; others constant plus tiny noise
        Rng rng(23);
        const size_t rows = 24, bins = 17;
        std::vector<std::vector<double>> spectra(rows, std::vector<double>(bins));
        std::vector<double> usages(rows);
        for (size_t r = 0; r < rows; ++r) {
            usages[r] = static_cast<double>(r % 12);
            for (size_t b = 0; b < bins; ++b)
                spectra[r][b] = 1.0 + 0.01 * rng.uniform_real(-1, 1);
            spectra[r][3] = usages[r];
        }
        const auto schema = fit_frequency_selection(spectra, usages, 1, small_options(32));
        REQUIRE(schema.selected_freq_indices.size() == 1);
        CHECK(schema.selected_freq_indices[0] == 3);
    }
    SUBCASE("k equal to all candidate bins selects every non-DC bin sorted") {
        std::vector<std::vector<double>> spectra(4, std::vector<double>(9, 0.0));
        std::vector<double> usages = {1, 2, 3, 4};
        for (size_t r = 0; r < 4; ++r)
            for (size_t b = 0; b < 9; ++b) spectra[r][b] = usages[r] * (b + 1.0);
        const auto schema = fit_frequency_selection(spectra, usages, 8, small_options(16));
        REQUIRE(schema.selected_freq_indices.size() == 8);
        for (size_t i = 0; i < 8; ++i) CHECK(schema.selected_freq_indices[i] == i + 1);
    }
    SUBCASE("error paths") {
        std::vector<std::vector<double>> spectra(3, std::vector<double>(5, 1.0));
        CHECK_THROWS_AS(fit_frequency_selection(spectra, {1, 1, 1}, 2, small_options(8)),
                        InvalidArgumentError);  // constant usage
        CHECK_THROWS_AS(fit_frequency_selection(spectra, {1, 2, 3}, 5, small_options(8)),
                        InvalidArgumentError);  // fewer candidate bins than k
    }
}

TEST_CASE("extract_features") {
    const size_t bits = 64;
    // Two groups of two samples; bit pattern varies by sample.
    std::vector<std::vector<int>> rows(4, std::vector<int>(bits, 0));
    Rng rng(31);
    for (auto& row : rows)
        for (size_t b = 0; b < bits; ++b) row[b] = rng.bernoulli(0.4) ? 1 : 0;
    BitSampleSet set = make_set(rows);
    set.usage_months = 7.5;

    SchemaOptions options = small_options(bits, 1);
    FeatureSchema schema;
    schema.options = options;
    schema.selected_freq_indices = {1, 2, 5};
    schema.names = {"pct1s_max",  "pct1s_mean", "pct1s_min", "p1_addr_intercept",
                    "p1_addr_slope", "p1_addr_spearman", "spectrum_0", "spectrum_1",
                    "spectrum_2"};

    const auto fvs = extract_features(set, schema, 2);
    REQUIRE(fvs.size() == 2);
    for (const auto& fv : fvs) {
        CHECK(fv.values.size() == 9);
        CHECK(fv.device_id == "t");
        CHECK(fv.usage_months == 7.5);
        CHECK(fv.values[2] <= fv.values[1]);  // min <= mean
        CHECK(fv.values[1] <= fv.values[0]);  // mean <= max
        for (double v : fv.values) CHECK(std::isfinite(v));
    }

    SUBCASE("permuted selected indices permute the values identically") {
        FeatureSchema permuted = schema;
        permuted.selected_freq_indices = {5, 1, 2};
        const auto fvs2 = extract_features(set, permuted, 2);
        for (size_t g = 0; g < 2; ++g) {
            CHECK(fvs2[g].values[6] == fvs[g].values[8]);  // bin 5
            CHECK(fvs2[g].values[7] == fvs[g].values[6]);  // bin 1
            CHECK(fvs2[g].values[8] == fvs[g].values[7]);  // bin 2
        }
    }

    SUBCASE("determinism: identical bits give bit-identical features") {
        const auto fvs2 = extract_features(set, schema, 2);
        for (size_t g = 0; g < 2; ++g)
            for (size_t i = 0; i < fvs[g].values.size(); ++i)
                CHECK(fvs[g].values[i] == fvs2[g].values[i]);
    }

    SUBCASE("schema fitted for a different size is rejected") {
        FeatureSchema wrong = schema;
        wrong.options.num_bits = 128;
        CHECK_THROWS_AS(extract_features(set, wrong, 2), SchemaMismatchError);
    }

    SUBCASE("all-zero samples give zero features") {
        std::vector<std::vector<int>> zero_rows(2, std::vector<int>(bits, 0));
        BitSampleSet zeros = make_set(zero_rows);
        const auto zfv = extract_features(zeros, schema, 2);
        REQUIRE(zfv.size() == 1);
        CHECK(zfv[0].values[0] == 0.0);  // pct max
        CHECK(zfv[0].values[4] == 0.0);  // slope
        CHECK(zfv[0].values[6] == doctest::Approx(0.0).scale(1.0));
        CHECK(zfv[0].values[7] == doctest::Approx(0.0).scale(1.0));
    }
}

TEST_CASE("bit-flip invariance of the feature family") {
    const size_t bits = 64;
    std::vector<std::vector<int>> rows(4, std::vector<int>(bits, 0));
    Rng rng(37);
    for (auto& row : rows)
        for (size_t b = 0; b < bits; ++b) row[b] = rng.bernoulli(0.3) ? 1 : 0;
    const BitSampleSet set = make_set(rows);

    std::vector<std::vector<int>> flipped = rows;
    for (auto& row : flipped)
        for (auto& v : row) v = 1 - v;
    const BitSampleSet fset = make_set(flipped);

    const auto s = pct_ones_stats(set);
    const auto fs = pct_ones_stats(fset);
    CHECK(fs.mean == doctest::Approx(1.0 - s.mean).epsilon(1e-12));

    const P1Map p1 = compute_p1(set);
    const P1Map fp1 = compute_p1(fset);
    const auto reg = p1_address_regression(p1, 1);
    const auto freg = p1_address_regression(fp1, 1);
    CHECK(freg.slope == doctest::Approx(-reg.slope).epsilon(1e-9));
    CHECK(freg.intercept == doctest::Approx(1.0 - reg.intercept).epsilon(1e-9));

    const auto amp = p1_spectrum(p1);
    const auto famp = p1_spectrum(fp1);
    for (size_t k = 1; k < amp.size(); ++k)
        CHECK(famp[k] == doctest::Approx(amp[k]).epsilon(1e-9).scale(1.0));
}

TEST_CASE("schema document round trip and hash stability") {
    FeatureSchema schema;
    schema.options.num_bits = 16384;
    schema.options.group_size = 10;
    schema.options.block_bytes = 64;
    schema.selected_freq_indices.resize(50);
    std::iota(schema.selected_freq_indices.begin(), schema.selected_freq_indices.end(),
              size_t{1});
    schema.names = {"pct1s_max",       "pct1s_mean",    "pct1s_min",
                    "p1_addr_intercept", "p1_addr_slope", "p1_addr_spearman"};
    for (int i = 0; i < 50; ++i) schema.names.push_back("spectrum_" + std::to_string(i));
    schema.validate();

    const std::string text = schema.to_json_string();
    const FeatureSchema back = FeatureSchema::from_json_string(text);
    CHECK(back.names == schema.names);
    CHECK(back.selected_freq_indices == schema.selected_freq_indices);
    CHECK(back.options.num_bits == schema.options.num_bits);
    CHECK(back.hash() == schema.hash());

    FeatureSchema tweaked = schema;
    tweaked.selected_freq_indices[0] = 2;
    tweaked.selected_freq_indices[1] = 3;  // keep unique
    CHECK(tweaked.hash() != schema.hash());
}
