#include "sramage/fft.hpp"

#include <bit>
#include <cmath>
#include <cstdint>

namespace sramage {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 Cooley-Tukey; n must be a power of two.
void fft_pow2(std::vector<std::complex<double>>& a, bool inverse) {
    const size_t n = a.size();
    if (n <= 1) return;

    // Bit-reversal permutation.
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }

    for (size_t len = 2; len <= n; len <<= 1) {
        const double angle = (inverse ? 2.0 : -2.0) * kPi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(angle), std::sin(angle));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (size_t j = 0; j < len / 2; ++j) {
                const std::complex<double> u = a[i + j];
                const std::complex<double> v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wlen;
            }
        }
    }

    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (auto& v : a) v *= inv;
    }
}

// Chirp phase exp(-pi*i*n^2/N), reduced mod 2N to keep the argument small.
std::complex<double> chirp(uint64_t n, uint64_t big_n, bool conj) {
    const uint64_t r = (n % (2 * big_n)) * (n % (2 * big_n)) % (2 * big_n);
    const double angle = (conj ? kPi : -kPi) * static_cast<double>(r) / static_cast<double>(big_n);
    return {std::cos(angle), std::sin(angle)};
}

// Bluestein: X_k = chirp(k) * (a (*) b)_k, where a_n = x_n*chirp(n) and
// b_n = conj(chirp(n)); the linear convolution runs over a power-of-two FFT.
std::vector<std::complex<double>> fft_bluestein(const std::vector<std::complex<double>>& x) {
    const size_t n = x.size();
    size_t m = 1;
    while (m < 2 * n - 1) m <<= 1;

    std::vector<std::complex<double>> a(m, {0.0, 0.0});
    std::vector<std::complex<double>> b(m, {0.0, 0.0});
    for (size_t i = 0; i < n; ++i) {
        a[i] = x[i] * chirp(i, n, false);
        const std::complex<double> c = chirp(i, n, true);
        b[i] = c;
        if (i > 0) b[m - i] = c;
    }

    fft_pow2(a, false);
    fft_pow2(b, false);
    for (size_t i = 0; i < m; ++i) a[i] *= b[i];
    fft_pow2(a, true);

    std::vector<std::complex<double>> out(n);
    for (size_t k = 0; k < n; ++k) out[k] = a[k] * chirp(k, n, false);
    return out;
}

}

std::vector<std::complex<double>> dft_forward(const std::vector<std::complex<double>>& x) {
    if (x.size() <= 1) return x;
    if (is_pow2(x.size())) {
        std::vector<std::complex<double>> a = x;
        fft_pow2(a, false);
        return a;
    }
    return fft_bluestein(x);
}

std::vector<std::complex<double>> dft_forward_real(const std::vector<double>& x) {
    std::vector<std::complex<double>> cx(x.size());
    for (size_t i = 0; i < x.size(); ++i) cx[i] = {x[i], 0.0};
    return dft_forward(cx);
}

}
