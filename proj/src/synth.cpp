#include "crowdcount/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "crowdcount/error.hpp"
#include "crowdcount/model_io.hpp"
#include "crowdcount/rng.hpp"

namespace crowdcount {

namespace {

constexpr double kNearSpacing = 14.0;
constexpr double kFarSpacing = 6.0;
constexpr double kNoiseSigma = 0.03;

std::uint64_t image_seed(std::uint64_t seed, std::size_t index) {
  // splitmix64 finalizer over (seed, index)
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct Site {
  double x, y, spacing;
};

std::vector<Site> lattice(double horizon, std::size_t w, std::size_t h, double shrink, Rng& rng) {
  std::vector<Site> sites;
  const double depth = static_cast<double>(h) - horizon;
  auto spacing_at = [&](double y) {
    const double t = std::clamp((y - horizon) / depth, 0.0, 1.0);
    return shrink * (kFarSpacing + (kNearSpacing - kFarSpacing) * t);
  };
  double y = horizon + spacing_at(horizon) / 2.0;
  bool odd = false;
  while (y < static_cast<double>(h)) {
    const double s = spacing_at(y);
    for (double x = odd ? s : s / 2.0; x < static_cast<double>(w); x += s) {
      const double jx = x + rng.uniform(-0.3, 0.3) * s;
      const double jy = y + rng.uniform(-0.3, 0.3) * s;
      if (jx >= 0.0 && jx < static_cast<double>(w) && jy >= horizon && jy < static_cast<double>(h))
        sites.push_back({jx, jy, s});
    }
    odd = !odd;
    y += s * 0.87;
  }
  return sites;
}

}  // namespace

Sample synth_image(const SynthParams& p, std::size_t index) {
  require(p.width >= 32 && p.height >= 32, "synth: images must be at least 32x32");
  require(p.min_dots <= p.max_dots, "synth: min_dots must not exceed max_dots");
  Rng rng(image_seed(p.seed, index));
  const auto w = p.width, h = p.height;
  const double fh = static_cast<double>(h);
  const double horizon = rng.uniform(0.15 * fh, 0.55 * fh);
  const std::size_t n = p.min_dots + rng.index(p.max_dots - p.min_dots + 1);

  std::vector<Site> sites;
  for (double shrink = 1.0;; shrink *= 0.9) {
    sites = lattice(horizon, w, h, shrink, rng);
    if (static_cast<double>(sites.size()) >= 1.25 * static_cast<double>(n)) break;
    if (shrink < 0.05) fail(ErrorCode::InvalidArgument, "synth: cannot place " + std::to_string(n) + " heads");
  }
  rng.shuffle(sites.begin(), sites.end());
  sites.resize(n);

  // Background: smooth bright sky above the horizon, darker ground with a vertical ramp.
  GrayImage img(w, h);
  const double sky = rng.uniform(0.55, 0.75);
  const double ground = rng.uniform(0.15, 0.3);
  for (std::size_t r = 0; r < h; ++r) {
    const double y = static_cast<double>(r);
    const double base = y < horizon ? sky - 0.1 * y / fh : ground + 0.08 * (y - horizon) / fh;
    for (std::size_t c = 0; c < w; ++c) img.at(r, c) = base;
  }

  DotAnnotation ann;
  char id[32];
  std::snprintf(id, sizeof id, "synth_%04zu", index);
  ann.image_id = id;
  ann.width = w;
  ann.height = h;
  for (const auto& s : sites) {
    const double sigma = std::max(1.0, 0.2 * s.spacing);
    const double amp = rng.uniform(0.3, 0.5);
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    const auto cx = static_cast<long>(std::lround(s.x)), cy = static_cast<long>(std::lround(s.y));
    for (long r = cy - radius; r <= cy + radius; ++r) {
      if (r < 0 || r >= static_cast<long>(h)) continue;
      for (long c = cx - radius; c <= cx + radius; ++c) {
        if (c < 0 || c >= static_cast<long>(w)) continue;
        const double dx = static_cast<double>(c) - s.x, dy = static_cast<double>(r) - s.y;
        img.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) +=
            amp * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      }
    }
    ann.points.push_back({s.x, s.y});
  }
  for (double& v : img.pixels()) v = std::round(std::clamp(v + kNoiseSigma * rng.normal(), 0.0, 1.0) * 255.0) / 255.0;
  return Sample{std::move(ann), std::move(img)};
}

std::vector<Sample> synth_dataset(const SynthParams& params) {
  std::vector<Sample> out;
  out.reserve(params.count);
  for (std::size_t i = 0; i < params.count; ++i) out.push_back(synth_image(params, i));
  return out;
}

std::string write_dataset(const std::vector<Sample>& samples, const std::string& out_dir) {
  namespace fs = std::filesystem;
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& s : samples) {
    const std::string image = "images/" + s.annotation.image_id + ".pgm";
    const std::string annotation = "annotations/" + s.annotation.image_id + ".json";
    write_file_atomic((fs::path(out_dir) / image).string(), encode_pgm(s.image));
    write_file_atomic((fs::path(out_dir) / annotation).string(), dump_annotation(s.annotation));
    entries.push_back({{"image", image}, {"annotation", annotation}});
  }
  const std::string manifest = (fs::path(out_dir) / "manifest.json").string();
  write_file_atomic(manifest, nlohmann::json{{"root", "."}, {"entries", entries}}.dump(2) + "\n");
  return manifest;
}

}  // namespace crowdcount
