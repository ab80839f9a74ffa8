#include "crowdcount/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "crowdcount/error.hpp"
#include "crowdcount/rng.hpp"

namespace crowdcount {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open '" + path + "'");
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

json parse_json(std::string_view bytes, const char* what) {
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Parse, std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::vector<std::size_t> FoldSplit::members(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] == fold) out.push_back(i);
  return out;
}

std::map<std::string, std::size_t> FoldSplit::assignment() const {
  std::map<std::string, std::size_t> out;
  for (std::size_t i = 0; i < ids.size(); ++i) out.emplace(ids[i], fold_of[i]);
  return out;
}

DotAnnotation load_annotation(std::string_view bytes) {
  const json j = parse_json(bytes, "annotation");
  DotAnnotation ann;
  try {
    ann.image_id = j.at("image_id").get<std::string>();
    ann.width = j.at("width").get<std::size_t>();
    ann.height = j.at("height").get<std::size_t>();
    const auto& pts = j.at("points");
    if (!pts.is_array()) fail(ErrorCode::Parse, "annotation: 'points' must be an array");
    ann.points.reserve(pts.size());
    for (const auto& p : pts) {
      if (!p.is_array() || p.size() != 2) fail(ErrorCode::Parse, "annotation: each point must be [x, y]");
      ann.points.push_back(DotPoint{p[0].get<double>(), p[1].get<double>()});
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string("annotation: ") + e.what());
  }
  for (std::size_t i = 0; i < ann.points.size(); ++i) {
    const auto& p = ann.points[i];
    if (!(p.x >= 0.0 && p.x < static_cast<double>(ann.width) && p.y >= 0.0 &&
          p.y < static_cast<double>(ann.height)))
      fail(ErrorCode::Validation, "annotation '" + ann.image_id + "': point " + std::to_string(i) +
                                      " (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                                      ") outside " + std::to_string(ann.width) + "x" +
                                      std::to_string(ann.height));
  }
  return ann;
}

std::string dump_annotation(const DotAnnotation& ann) {
  json pts = json::array();
  for (const auto& p : ann.points) pts.push_back({p.x, p.y});
  json j = {{"image_id", ann.image_id}, {"width", ann.width}, {"height", ann.height}, {"points", pts}};
  return j.dump() + "\n";
}

DatasetManifest parse_manifest(std::string_view bytes, const std::string& base_dir) {
  const json j = parse_json(bytes, "manifest");
  DatasetManifest m;
  try {
    fs::path root = j.at("root").get<std::string>();
    if (root.is_relative()) root = fs::path(base_dir) / root;
    m.root = root.lexically_normal().string();
    for (const auto& e : j.at("entries")) {
      m.entries.push_back(ManifestEntry{(root / e.at("image").get<std::string>()).lexically_normal().string(),
                                        (root / e.at("annotation").get<std::string>()).lexically_normal().string()});
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string("manifest: ") + e.what());
  }
  return m;
}

DatasetManifest load_manifest(const std::string& path) {
  const auto base = fs::path(path).parent_path().string();
  return parse_manifest(slurp(path), base.empty() ? "." : base);
}

std::vector<Sample> load_samples(const DatasetManifest& manifest) {
  std::vector<Sample> samples;
  std::set<std::string> seen;
  for (const auto& entry : manifest.entries) {
    Sample s{load_annotation(slurp(entry.annotation)), read_image(entry.image)};
    if (!seen.insert(s.annotation.image_id).second)
      fail(ErrorCode::Validation, "manifest: duplicate image id '" + s.annotation.image_id + "'");
    if (s.image.width() != s.annotation.width || s.image.height() != s.annotation.height)
      fail(ErrorCode::Validation, "annotation '" + s.annotation.image_id + "' size does not match image '" +
                                      entry.image + "'");
    samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<std::size_t> cell_ground_truth(const DotAnnotation& ann, std::span<const CellRect> cells) {
  std::vector<std::size_t> counts(cells.size(), 0);
  for (const auto& p : ann.points)
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (cells[i].contains(p.x, p.y)) ++counts[i];
  return counts;
}

FoldSplit make_folds(std::span<const std::string> ids, std::size_t k, std::uint64_t seed) {
  if (k < 2) fail(ErrorCode::InvalidArgument, "make_folds: k must be >= 2");
  if (k > ids.size())
    fail(ErrorCode::InvalidArgument, "make_folds: k = " + std::to_string(k) + " exceeds " +
                                         std::to_string(ids.size()) + " ids");
  FoldSplit split;
  split.k = k;
  split.seed = seed;
  split.ids.assign(ids.begin(), ids.end());
  split.fold_of.assign(ids.size(), 0);

  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order.begin(), order.end());
  for (std::size_t i = 0; i < order.size(); ++i) split.fold_of[order[i]] = i % k;
  return split;
}

}  // namespace crowdcount
