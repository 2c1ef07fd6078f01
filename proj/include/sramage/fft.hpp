#pragma once

#include <complex>
#include <vector>

namespace sramage {

// Unnormalized forward DFT: X_k = sum_n x_n exp(-2*pi*i*n*k/N).
// Power-of-two sizes run radix-2 in place; other sizes go through the
// Bluestein chirp transform. Any N >= 1.
std::vector<std::complex<double>> dft_forward(const std::vector<std::complex<double>>& x);

// Convenience wrapper for real input.
std::vector<std::complex<double>> dft_forward_real(const std::vector<double>& x);

}
