#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace crowdcount::fft {

using Complex = std::complex<double>;

/// In-place DFT of any length. Powers of two use an iterative radix-2 kernel; other
/// lengths go through Bluestein's chirp-z convolution. The inverse is scaled by 1/n.
void transform(std::vector<Complex>& data, bool inverse);

/// Row-major 2-D transform (rows, then columns).
void transform_2d(std::vector<Complex>& data, std::size_t width, std::size_t height, bool inverse);

}  // namespace crowdcount::fft
