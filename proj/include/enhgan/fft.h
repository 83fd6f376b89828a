// Copyright 2026 The enhgan Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <vector>

namespace enhgan {

// In-place iterative radix-2 FFT. n must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse);

// Real-input FFT: returns bins 0..n/2 (n/2+1 complex values).
std::vector<std::complex<double>> rfft(const std::vector<double>& x);

// Adjoint of rfft viewed as a linear map R^n -> R^{2(n/2+1)} (real/imag parts
// treated as independent outputs). Used by the spectrogram backward pass:
// given dL/dX over bins 0..n/2, returns dL/dx over the n time samples.
std::vector<double> rfft_adjoint(const std::vector<std::complex<double>>& g, int n);

bool is_power_of_two(int64_t n);

}  // namespace enhgan
