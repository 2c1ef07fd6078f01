#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "sramage/fft.hpp"
#include "sramage/rng.hpp"

using namespace sramage;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// Quadratic-time reference DFT.
std::vector<std::complex<double>> dft_naive(const std::vector<std::complex<double>>& x) {
    const size_t n = x.size();
    std::vector<std::complex<double>> out(n, {0, 0});
    for (size_t k = 0; k < n; ++k) {
        for (size_t t = 0; t < n; ++t) {
            const double angle = -2.0 * kPi * static_cast<double>(k) * static_cast<double>(t) /
                                 static_cast<double>(n);
            out[k] += x[t] * std::complex<double>(std::cos(angle), std::sin(angle));
        }
    }
    return out;
}

}

TEST_CASE("dft matches the naive reference on assorted sizes") {
    Rng rng(5);
    // powers of two, byte-aligned non-powers, odd sizes
    for (size_t n : {1u, 2u, 3u, 4u, 5u, 8u, 16u, 24u, 40u, 56u, 64u, 100u, 127u, 128u}) {
        std::vector<std::complex<double>> x(n);
        for (auto& v : x) v = {rng.uniform_real(-1, 1), rng.uniform_real(-1, 1)};
        const auto fast = dft_forward(x);
        const auto slow = dft_naive(x);
        REQUIRE(fast.size() == n);
        for (size_t k = 0; k < n; ++k) {
            CHECK(fast[k].real() == doctest::Approx(slow[k].real()).epsilon(1e-9).scale(1.0));
            CHECK(fast[k].imag() == doctest::Approx(slow[k].imag()).epsilon(1e-9).scale(1.0));
        }
    }
}

TEST_CASE("parseval identity on large power-of-two input") {
    Rng rng(9);
    const size_t n = 16384;
    std::vector<double> x(n);
    double mean = 0;
    for (auto& v : x) {
        v = rng.uniform_real(0, 1);
        mean += v;
    }
    mean /= static_cast<double>(n);
    for (auto& v : x) v -= mean;

    const auto freq = dft_forward_real(x);
    double time_energy = 0, freq_energy = 0;
    for (double v : x) time_energy += v * v;
    for (const auto& v : freq) freq_energy += std::norm(v);
    CHECK(freq_energy == doctest::Approx(static_cast<double>(n) * time_energy).epsilon(1e-9));
}

TEST_CASE("pure cosine concentrates in one bin") {
    const size_t n = 1024, bin = 37;
    std::vector<double> x(n);
    for (size_t i = 0; i < n; ++i)
        x[i] = 0.1 * std::cos(2.0 * kPi * static_cast<double>(bin) * static_cast<double>(i) /
                              static_cast<double>(n));
    const auto freq = dft_forward_real(x);
    // one-sided unnormalized amplitude: 0.05 * n at the cosine bin
    CHECK(std::abs(freq[bin]) == doctest::Approx(0.05 * n).epsilon(1e-9));
    for (size_t k = 0; k <= n / 2; ++k) {
        if (k == bin) continue;
        CHECK(std::abs(freq[k]) < 1e-8 * n);
    }
}
