#pragma once

#include <complex>
#include <vector>

namespace intona {

// In-place complex FFT. Radix-2 for power-of-two sizes, direct DFT otherwise.
// inverse=true applies the 1/N scale.
void fft(std::vector<std::complex<double>>& a, bool inverse);

}  // namespace intona
