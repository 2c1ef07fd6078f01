#include "sramage/bitcore.hpp"

#include <bit>
#include <numeric>

namespace sramage {

size_t BitMatrix::popcount_row(size_t row) const {
    const uint64_t* w = words_.data() + row * words_per_row_;
    size_t total = 0;
    for (size_t i = 0; i < words_per_row_; ++i) total += std::popcount(w[i]);
    return total;
}

void BitSampleSet::validate() const {
    if (bits.rows() == 0) throw InvalidArgumentError("BitSampleSet: no samples");
    if (bits.bits() == 0) throw InvalidArgumentError("BitSampleSet: no bits");
    if (bits.bits() % 8 != 0)
        throw InvalidArgumentError("BitSampleSet: bit count must be byte-aligned");
}

P1Map::P1Map(std::vector<uint32_t> counts, uint32_t num_samples_used)
    : counts_(std::move(counts)), num_samples_used_(num_samples_used) {
    if (num_samples_used_ == 0) throw InvalidArgumentError("P1Map: zero samples");
    for (uint32_t c : counts_)
        if (c > num_samples_used_)
            throw InvalidArgumentError("P1Map: count exceeds sample count");
}

std::vector<double> P1Map::values() const {
    std::vector<double> out(counts_.size());
    const double inv = 1.0 / static_cast<double>(num_samples_used_);
    for (size_t i = 0; i < counts_.size(); ++i) out[i] = counts_[i] * inv;
    return out;
}

double P1Map::mean() const {
    // Sum the integer counts first; exact up to 2^53.
    uint64_t total = 0;
    for (uint32_t c : counts_) total += c;
    return static_cast<double>(total) /
           (static_cast<double>(num_samples_used_) * static_cast<double>(counts_.size()));
}

namespace {

// Accumulates set-bit counts of one row into per-bit counters.
void accumulate_row(const BitMatrix& bits, size_t row, std::vector<uint32_t>& counts) {
    const auto words = bits.row_words(row);
    for (size_t w = 0; w < words.size(); ++w) {
        uint64_t word = words[w];
        const size_t base = w * 64;
        while (word) {
            counts[base + static_cast<size_t>(std::countr_zero(word))]++;
            word &= word - 1;
        }
    }
}

}

P1Map compute_p1(const BitSampleSet& samples, std::span<const size_t> sample_indices) {
    if (sample_indices.empty())
        throw InvalidArgumentError("compute_p1: empty sample index set");
    const size_t n = samples.num_samples();
    std::vector<uint32_t> counts(samples.num_bits(), 0);
    for (size_t idx : sample_indices) {
        if (idx >= n) throw InvalidArgumentError("compute_p1: sample index out of range");
        accumulate_row(samples.bits, idx, counts);
    }
    return P1Map(std::move(counts), static_cast<uint32_t>(sample_indices.size()));
}

P1Map compute_p1(const BitSampleSet& samples) {
    return compute_p1_range(samples, 0, samples.num_samples());
}

P1Map compute_p1_range(const BitSampleSet& samples, size_t first, size_t count) {
    if (count == 0) throw InvalidArgumentError("compute_p1: empty sample range");
    if (first + count > samples.num_samples())
        throw InvalidArgumentError("compute_p1: sample range out of bounds");
    std::vector<uint32_t> counts(samples.num_bits(), 0);
    for (size_t row = first; row < first + count; ++row)
        accumulate_row(samples.bits, row, counts);
    return P1Map(std::move(counts), static_cast<uint32_t>(count));
}

InstabilityMap compute_instability(const P1Map& p1) {
    InstabilityMap out;
    out.values.resize(p1.size());
    for (size_t i = 0; i < p1.size(); ++i) {
        const double v = p1.value(i);
        out.values[i] = v <= 0.5 ? v : 1.0 - v;
    }
    return out;
}

std::vector<P1Map> group_p1(const BitSampleSet& samples, size_t group_size) {
    if (group_size == 0) throw InvalidArgumentError("group_p1: group_size must be positive");
    if (group_size > samples.num_samples())
        throw InvalidArgumentError("group_p1: group_size exceeds sample count");
    const size_t num_groups = samples.num_samples() / group_size;
    std::vector<P1Map> maps;
    maps.reserve(num_groups);
    for (size_t g = 0; g < num_groups; ++g)
        maps.push_back(compute_p1_range(samples, g * group_size, group_size));
    return maps;
}

}
