#include "crowdcount/config.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>

#include "crowdcount/error.hpp"

namespace crowdcount {

using nlohmann::json;

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

const char* kernel_name(KernelType t) { return t == KernelType::Linear ? "linear" : "rbf"; }

void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(ErrorCode::Config, "config: '" + where + "' must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items())
    if (!ok.contains(key)) fail(ErrorCode::Config, "config: unknown key '" + (where.empty() ? key : where + "." + key) + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::Config, "config: bad value for '" + (where.empty() ? std::string(key) : where + "." + key) + "'");
  }
}

void check(bool cond, const std::string& what) {
  if (!cond) fail(ErrorCode::Config, "config: " + what);
}

}  // namespace

json Config::to_json() const {
  return json{
      {"cell_size", cell_size},
      {"fourier", {{"cutoff", fourier.cutoff}, {"peak_sigma", fourier.peak_sigma}}},
      {"glcm", {{"levels", glcm_levels}}},
      {"codebook",
       {{"K", codebook.size},
        {"max_descriptors", codebook.max_descriptors},
        {"max_iter", codebook.max_iter},
        {"rate_floor", codebook.rate_floor}}},
      {"svr",
       {{"kernel", kernel_name(svr.kernel.type)},
        {"gamma", svr.kernel.gamma},
        {"C", svr.C},
        {"epsilon", svr.epsilon},
        {"tol", svr.tol},
        {"max_iter", svr.max_iter}}},
      {"head",
       {{"window", head.window},
        {"threshold", head.threshold},
        {"scales", head.scales},
        {"nms_overlap", head.nms_overlap},
        {"max_positives", head.max_positives}}},
      {"sampling", {{"stride", stride}}},
      {"seed", seed},
  };
}

Config Config::from_json(const json& j) {
  Config c;
  reject_unknown(j, "", {"cell_size", "fourier", "glcm", "codebook", "svr", "head", "sampling", "seed"});
  read(j, "cell_size", c.cell_size, "");
  read(j, "seed", c.seed, "");
  if (j.contains("fourier")) {
    const auto& f = j["fourier"];
    reject_unknown(f, "fourier", {"cutoff", "peak_sigma"});
    read(f, "cutoff", c.fourier.cutoff, "fourier");
    read(f, "peak_sigma", c.fourier.peak_sigma, "fourier");
  }
  if (j.contains("glcm")) {
    reject_unknown(j["glcm"], "glcm", {"levels"});
    read(j["glcm"], "levels", c.glcm_levels, "glcm");
  }
  if (j.contains("codebook")) {
    const auto& b = j["codebook"];
    reject_unknown(b, "codebook", {"K", "max_descriptors", "max_iter", "rate_floor"});
    read(b, "K", c.codebook.size, "codebook");
    read(b, "max_descriptors", c.codebook.max_descriptors, "codebook");
    read(b, "max_iter", c.codebook.max_iter, "codebook");
    read(b, "rate_floor", c.codebook.rate_floor, "codebook");
  }
  if (j.contains("svr")) {
    const auto& s = j["svr"];
    reject_unknown(s, "svr", {"kernel", "gamma", "C", "epsilon", "tol", "max_iter"});
    std::string kernel = kernel_name(c.svr.kernel.type);
    read(s, "kernel", kernel, "svr");
    if (kernel == "linear") c.svr.kernel.type = KernelType::Linear;
    else if (kernel == "rbf") c.svr.kernel.type = KernelType::Rbf;
    else fail(ErrorCode::Config, "config: svr.kernel must be 'linear' or 'rbf'");
    read(s, "gamma", c.svr.kernel.gamma, "svr");
    read(s, "C", c.svr.C, "svr");
    read(s, "epsilon", c.svr.epsilon, "svr");
    read(s, "tol", c.svr.tol, "svr");
    read(s, "max_iter", c.svr.max_iter, "svr");
  }
  if (j.contains("head")) {
    const auto& h = j["head"];
    reject_unknown(h, "head", {"window", "threshold", "scales", "nms_overlap", "max_positives"});
    read(h, "window", c.head.window, "head");
    read(h, "threshold", c.head.threshold, "head");
    read(h, "scales", c.head.scales, "head");
    read(h, "nms_overlap", c.head.nms_overlap, "head");
    read(h, "max_positives", c.head.max_positives, "head");
  }
  if (j.contains("sampling")) {
    reject_unknown(j["sampling"], "sampling", {"stride"});
    read(j["sampling"], "stride", c.stride, "sampling");
  }
  c.validate();
  return c;
}

void Config::validate() const {
  check(cell_size >= kMinGridCellSize, "cell_size must be >= 32");
  check(fourier.cutoff > 0.0 && fourier.cutoff <= 1.0, "fourier.cutoff must be in (0, 1]");
  check(fourier.peak_sigma >= 0.0, "fourier.peak_sigma must be >= 0");
  check(glcm_levels >= 2 && glcm_levels <= 256, "glcm.levels must be in [2, 256]");
  check(codebook.size >= 1, "codebook.K must be >= 1");
  check(codebook.max_descriptors >= codebook.size, "codebook.max_descriptors must be >= codebook.K");
  check(codebook.max_iter >= 1, "codebook.max_iter must be >= 1");
  check(codebook.rate_floor > 0.0, "codebook.rate_floor must be > 0");
  check(svr.kernel.gamma >= 0.0, "svr.gamma must be >= 0 (0 = 1/dimension)");
  check(svr.C > 0.0, "svr.C must be > 0");
  check(svr.epsilon >= 0.0, "svr.epsilon must be >= 0");
  check(svr.tol > 0.0, "svr.tol must be > 0");
  check(svr.max_iter >= 1, "svr.max_iter must be >= 1");
  check(head.window >= 8 && head.window % kHogCellSize == 0, "head.window must be a multiple of 4, >= 8");
  check(!head.scales.empty(), "head.scales must be non-empty");
  for (double s : head.scales) check(s > 0.0, "head.scales must be positive");
  check(head.nms_overlap > 0.0 && head.nms_overlap <= 1.0, "head.nms_overlap must be in (0, 1]");
  check(head.max_positives >= 10, "head.max_positives must be >= 10");
  check(stride == 0 || stride <= cell_size, "sampling.stride must be 0 or <= cell_size");
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open config '" + path + "'");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return from_json(json::parse(text));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Config, "config '" + path + "': " + e.what());
  }
}

void Config::set(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    fail(ErrorCode::Config, "override '" + std::string(assignment) + "' is not key=value");
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json j = to_json();
  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (dot == std::string::npos) {
      if (!node->is_object() || !node->contains(part)) fail(ErrorCode::Config, "config: unknown key '" + key + "'");
      (*node)[part] = value;
      break;
    }
    if (!node->contains(part) || !(*node)[part].is_object())
      fail(ErrorCode::Config, "config: unknown key '" + key + "'");
    node = &(*node)[part];
    start = dot + 1;
  }
  *this = from_json(j);
}

std::uint64_t Config::hash() const {
  json j = to_json();
  j.erase("seed");
  return fnv1a64(j.dump());
}

}  // namespace crowdcount
