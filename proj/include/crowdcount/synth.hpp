#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "crowdcount/dataset.hpp"

namespace crowdcount {

/// Blob crowds: bright Gaussian heads on a jittered lattice whose spacing grows from the
/// horizon toward the bottom edge, over a textured ground and a smooth sky.
struct SynthParams {
  std::size_t count = 10;
  std::size_t min_dots = 50;
  std::size_t max_dots = 500;
  std::size_t width = 384;
  std::size_t height = 384;
  std::uint64_t seed = 0;
};

/// Image i depends only on (seed, i, sizes, dot range). Intensities are 8-bit exact.
Sample synth_image(const SynthParams& params, std::size_t index);
std::vector<Sample> synth_dataset(const SynthParams& params);

/// Writes images/<id>.pgm, annotations/<id>.json and manifest.json under `out_dir`.
/// Returns the manifest path.
std::string write_dataset(const std::vector<Sample>& samples, const std::string& out_dir);

}  // namespace crowdcount
