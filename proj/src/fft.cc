// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "enhgan/fft.h"

#include <cmath>
#include <stdexcept>

namespace enhgan {

bool is_power_of_two(int64_t n) { return n > 0 && (n & (n - 1)) == 0; }

void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
  const size_t n = a.size();
  if (!is_power_of_two(static_cast<int64_t>(n)))
    throw std::invalid_argument("fft: size must be a power of two");
  // Bit-reversal permutation.
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * M_PI / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& v : a) v *= inv;
  }
}

std::vector<std::complex<double>> rfft(const std::vector<double>& x) {
  const size_t n = x.size();
  std::vector<std::complex<double>> a(n);
  for (size_t i = 0; i < n; ++i) a[i] = std::complex<double>(x[i], 0.0);
  fft_inplace(a, false);
  a.resize(n / 2 + 1);
  return a;
}

std::vector<double> rfft_adjoint(const std::vector<std::complex<double>>& g, int n) {
  if (static_cast<int>(g.size()) != n / 2 + 1)
    throw std::invalid_argument("rfft_adjoint: gradient has wrong bin count");
  // dL/dx_t = sum_k Re(g_k) cos(2 pi k t / n) - Im(g_k) sin(2 pi k t / n)
  //         = Re( sum_{k=0..n/2} g_k e^{+i 2 pi k t / n} ),
  // computed with one full-size inverse-direction FFT of the zero-extended
  // (non-Hermitian) spectrum.
  std::vector<std::complex<double>> a(static_cast<size_t>(n), {0.0, 0.0});
  for (size_t k = 0; k < g.size(); ++k) a[k] = g[k];
  fft_inplace(a, true);
  std::vector<double> out(static_cast<size_t>(n));
  for (int t = 0; t < n; ++t) out[static_cast<size_t>(t)] = a[static_cast<size_t>(t)].real() * n;
  return out;
}

}  // namespace enhgan
