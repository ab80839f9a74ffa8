#include "crowdcount/fourier.hpp"

#include <cmath>

#include "crowdcount/error.hpp"
#include "crowdcount/fft.hpp"

namespace crowdcount {

namespace {

// Signed frequency of DFT bin k for length n, in cycles per sample.
double bin_frequency(std::size_t k, std::size_t n) {
  const auto kk = static_cast<double>(k);
  const auto nn = static_cast<double>(n);
  return (2 * k <= n ? kk : kk - nn) / nn;
}

}  // namespace

GrayImage low_pass(const GrayImage& signal, double cutoff) {
  require(cutoff > 0.0 && cutoff <= 1.0, "low_pass: cutoff must be in (0, 1]");
  const std::size_t w = signal.width(), h = signal.height();
  std::vector<fft::Complex> spectrum(signal.pixels().begin(), signal.pixels().end());
  fft::transform_2d(spectrum, w, h, false);

  // Normalized radius: 1 at the spectrum corner (Nyquist on both axes).
  const double corner = std::sqrt(0.5);
  for (std::size_t v = 0; v < h; ++v) {
    const double fy = bin_frequency(v, h);
    for (std::size_t u = 0; u < w; ++u) {
      const double fx = bin_frequency(u, w);
      const double radius = std::sqrt(fx * fx + fy * fy) / corner;
      if (radius > cutoff) spectrum[v * w + u] = 0.0;
    }
  }
  fft::transform_2d(spectrum, w, h, true);

  std::vector<double> out(spectrum.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = spectrum[i].real();
  return GrayImage(w, h, std::move(out));
}

std::vector<PeakLocation> find_peaks(const GrayImage& surface, double threshold) {
  const std::size_t w = surface.width(), h = surface.height();
  std::vector<PeakLocation> peaks;
  if (w < 3 || h < 3) return peaks;
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const double v = surface.at(r, c);
      if (!(v > threshold)) continue;
      bool is_peak = true;
      for (int dr = -1; dr <= 1 && is_peak; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const std::size_t rr = (r + h - 1 + static_cast<std::size_t>(dr + 1)) % h;
          const std::size_t cc = (c + w - 1 + static_cast<std::size_t>(dc + 1)) % w;
          const double n = surface.at(rr, cc);
          // Neighbours earlier in scan order must be strictly lower; later ones may tie.
          const bool earlier = dr < 0 || (dr == 0 && dc < 0);
          if (earlier ? !(v > n) : (n > v)) {
            is_peak = false;
            break;
          }
        }
      }
      if (is_peak) peaks.push_back(PeakLocation{r, c, v});
    }
  }
  return peaks;
}

FourierOutput fourier_analyze(const GrayImage& patch, const FourierParams& params) {
  require(patch.width() >= kMinCellSide && patch.height() >= kMinCellSide,
          "fourier_analyze: patch must be at least 16x16");
  require(params.cutoff > 0.0 && params.cutoff <= 1.0, "fourier_analyze: cutoff must be in (0, 1]");

  const GrayImage grad = gradient_magnitude(patch);
  const GrayImage recon = low_pass(grad, params.cutoff);

  std::vector<double> residual(grad.size());
  for (std::size_t i = 0; i < residual.size(); ++i)
    residual[i] = std::abs(grad.pixels()[i] - recon.pixels()[i]);

  FourierOutput out;
  out.recon_stats = moment_stats(recon.pixels());
  out.residual_stats = moment_stats(residual);

  double grad_max = 0.0;
  for (double g : grad.pixels()) grad_max = std::max(grad_max, g);
  if (grad_max == 0.0) return out;

  const double threshold =
      out.recon_stats.mean + params.peak_sigma * std::sqrt(out.recon_stats.variance);
  // A flat reconstruction carries no peaks.
  if (out.recon_stats.variance == 0.0) return out;
  out.peaks = find_peaks(recon, threshold);
  out.maxima_count = static_cast<double>(out.peaks.size());
  return out;
}

}  // namespace crowdcount
