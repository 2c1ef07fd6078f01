#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sramage/error.hpp"

namespace sramage {

// Packed binary matrix: rows are startup samples, columns are bit addresses.
// Bits are stored 64 per word; within a word, bit address i sits at position
// (i mod 64), so address order matches little-endian word order.
class BitMatrix {
public:
    BitMatrix() = default;
    BitMatrix(size_t rows, size_t bits)
        : rows_(rows), bits_(bits), words_per_row_((bits + 63) / 64),
          words_(rows * words_per_row_, 0) {}

    size_t rows() const { return rows_; }
    size_t bits() const { return bits_; }
    size_t words_per_row() const { return words_per_row_; }

    bool get(size_t row, size_t bit) const {
        return (words_[row * words_per_row_ + bit / 64] >> (bit % 64)) & 1u;
    }

    void set(size_t row, size_t bit, bool value) {
        uint64_t& w = words_[row * words_per_row_ + bit / 64];
        const uint64_t mask = uint64_t{1} << (bit % 64);
        if (value)
            w |= mask;
        else
            w &= ~mask;
    }

    std::span<const uint64_t> row_words(size_t row) const {
        return {words_.data() + row * words_per_row_, words_per_row_};
    }

    std::span<uint64_t> row_words(size_t row) {
        return {words_.data() + row * words_per_row_, words_per_row_};
    }

    // Number of set bits in one row.
    size_t popcount_row(size_t row) const;

private:
    size_t rows_ = 0;
    size_t bits_ = 0;
    size_t words_per_row_ = 0;
    std::vector<uint64_t> words_;
};

// One device's stack of startup dumps plus its metadata.
// Bit index i corresponds to byte address i/8, bit position i%8,
// least-significant bit first (see datasetio for the file mapping).
struct BitSampleSet {
    std::string device_id;
    double usage_months = 0.0;
    BitMatrix bits;

    size_t num_samples() const { return bits.rows(); }
    size_t num_bits() const { return bits.bits(); }

    // Throws unless N > 0, B > 0 and B is byte-aligned.
    void validate() const;
};

// Per-bit probability of one. Counts are kept exact; values are the
// rational count / num_samples_used.
class P1Map {
public:
    P1Map() = default;
    P1Map(std::vector<uint32_t> counts, uint32_t num_samples_used);

    size_t size() const { return counts_.size(); }
    uint32_t num_samples_used() const { return num_samples_used_; }
    uint32_t count(size_t i) const { return counts_[i]; }
    const std::vector<uint32_t>& counts() const { return counts_; }

    double value(size_t i) const {
        return static_cast<double>(counts_[i]) / static_cast<double>(num_samples_used_);
    }

    std::vector<double> values() const;
    double mean() const;

private:
    std::vector<uint32_t> counts_;
    uint32_t num_samples_used_ = 0;
};

// Per-bit instability, min(P1, 1-P1), in [0, 0.5].
struct InstabilityMap {
    std::vector<double> values;
};

// P1 over the given subset of samples. Throws InvalidArgumentError on an
// empty subset or out-of-range indices.
P1Map compute_p1(const BitSampleSet& samples, std::span<const size_t> sample_indices);

// P1 over all samples.
P1Map compute_p1(const BitSampleSet& samples);

// P1 over the contiguous sample range [first, first + count).
P1Map compute_p1_range(const BitSampleSet& samples, size_t first, size_t count);

// I = P1 if P1 <= 0.5 else 1 - P1, per bit.
InstabilityMap compute_instability(const P1Map& p1);

// Partitions samples into consecutive groups of exactly group_size (the
// trailing remainder is discarded) and computes one P1Map per group.
// Throws InvalidArgumentError when group_size is 0 or exceeds N.
std::vector<P1Map> group_p1(const BitSampleSet& samples, size_t group_size);

}
