#pragma once

#include <cstddef>
#include <vector>

#include "crowdcount/imaging.hpp"

namespace crowdcount {

struct FourierParams {
  /// Radius of the ideal low-pass disc as a fraction of the largest radial frequency
  /// in the centred spectrum, so 1 keeps every coefficient.
  double cutoff = 0.25;
  /// Peaks must exceed mean + peak_sigma * std of the reconstruction.
  double peak_sigma = 0.5;
};

struct PeakLocation {
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;
};

struct FourierOutput {
  double maxima_count = 0.0;
  MomentStats recon_stats;     // of the low-passed gradient
  MomentStats residual_stats;  // of |gradient - reconstruction|
  std::vector<PeakLocation> peaks;
};

/// Ideal circular low-pass of `signal` via the 2-D DFT; returns the real part of the
/// inverse transform.
GrayImage low_pass(const GrayImage& signal, double cutoff);

/// Local maxima over the 8-neighbourhood with wrap-around (the reconstruction is periodic).
/// Ties are broken in scan order so a flat-topped peak is reported once, at its first pixel.
std::vector<PeakLocation> find_peaks(const GrayImage& surface, double threshold);

/// Gradient -> low-pass -> inverse -> peak count, plus moment statistics.
FourierOutput fourier_analyze(const GrayImage& patch, const FourierParams& params = {});

}  // namespace crowdcount
