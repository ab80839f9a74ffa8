#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crowdcount/imaging.hpp"

namespace crowdcount {

struct DotPoint {
  double x = 0.0;  // column
  double y = 0.0;  // row
};

struct DotAnnotation {
  std::string image_id;
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<DotPoint> points;

  std::size_t count() const noexcept { return points.size(); }
};

struct ManifestEntry {
  std::string image;       // resolved path
  std::string annotation;  // resolved path
};

struct DatasetManifest {
  std::string root;
  std::vector<ManifestEntry> entries;
};

/// An annotated image held in memory.
struct Sample {
  DotAnnotation annotation;
  GrayImage image;
};

struct FoldSplit {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> ids;       // input order
  std::vector<std::size_t> fold_of;   // fold index per id, aligned with `ids`

  std::vector<std::size_t> members(std::size_t fold) const;
  std::map<std::string, std::size_t> assignment() const;
};

/// Parses the JSON annotation format
/// {"image_id": str, "width": int, "height": int, "points": [[x, y], ...]}.
/// Points must satisfy 0 <= x < width and 0 <= y < height.
DotAnnotation load_annotation(std::string_view bytes);
std::string dump_annotation(const DotAnnotation& ann);

/// Parses {"root": str, "entries": [{"image": relpath, "annotation": relpath}, ...]}.
/// A relative root is taken relative to `base_dir`; entry paths are relative to the root.
DatasetManifest parse_manifest(std::string_view bytes, const std::string& base_dir);
DatasetManifest load_manifest(const std::string& path);

/// Reads every image and annotation; checks dimensions agree and ids are unique.
std::vector<Sample> load_samples(const DatasetManifest& manifest);

/// Dots per cell by half-open containment. For a disjoint covering grid every dot is
/// counted exactly once.
std::vector<std::size_t> cell_ground_truth(const DotAnnotation& ann, std::span<const CellRect> cells);

/// Seeded shuffle followed by round-robin assignment into k folds.
FoldSplit make_folds(std::span<const std::string> ids, std::size_t k, std::uint64_t seed);

}  // namespace crowdcount
