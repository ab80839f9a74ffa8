#include "crowdcount/model_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "crowdcount/error.hpp"

namespace crowdcount {

using nlohmann::json;

namespace {

json matrix_json(const Matrix& m) {
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data().begin(), m.data().end())}};
}

Matrix matrix_from(const json& j) {
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != rows * cols) fail(ErrorCode::ModelIncompatible, "model: matrix data length mismatch");
  Matrix m;
  for (std::size_t r = 0; r < rows; ++r) m.push_row(std::span<const double>(data.data() + r * cols, cols));
  if (rows == 0) m = Matrix(0, cols);
  return m;
}

json regressor_json(const Regressor& r) {
  const auto& s = r.svr;
  return json{
      {"input_mean", r.inputs.mean},
      {"input_scale", r.inputs.scale},
      {"target_mean", r.target_mean},
      {"target_scale", r.target_scale},
      {"svr",
       {{"kernel", s.kernel.type == KernelType::Linear ? "linear" : "rbf"},
        {"gamma", s.kernel.gamma},
        {"C", s.C},
        {"epsilon", s.epsilon},
        {"tol", s.tol},
        {"dim", s.dim},
        {"support_vectors", matrix_json(s.support_vectors)},
        {"coefficients", s.coefficients},
        {"bias", s.bias},
        {"converged", s.converged},
        {"iterations", s.iterations}}},
  };
}

Regressor regressor_from(const json& j) {
  Regressor r;
  r.inputs.mean = j.at("input_mean").get<std::vector<double>>();
  r.inputs.scale = j.at("input_scale").get<std::vector<double>>();
  r.target_mean = j.at("target_mean").get<double>();
  r.target_scale = j.at("target_scale").get<double>();
  const auto& s = j.at("svr");
  const auto kernel = s.at("kernel").get<std::string>();
  if (kernel != "linear" && kernel != "rbf") fail(ErrorCode::ModelIncompatible, "model: unknown kernel '" + kernel + "'");
  r.svr.kernel.type = kernel == "linear" ? KernelType::Linear : KernelType::Rbf;
  r.svr.kernel.gamma = s.at("gamma").get<double>();
  r.svr.C = s.at("C").get<double>();
  r.svr.epsilon = s.at("epsilon").get<double>();
  r.svr.tol = s.at("tol").get<double>();
  r.svr.dim = s.at("dim").get<std::size_t>();
  r.svr.support_vectors = matrix_from(s.at("support_vectors"));
  r.svr.coefficients = s.at("coefficients").get<std::vector<double>>();
  r.svr.bias = s.at("bias").get<double>();
  r.svr.converged = s.at("converged").get<bool>();
  r.svr.iterations = s.at("iterations").get<std::size_t>();
  if (r.inputs.mean.size() != r.inputs.scale.size() || r.svr.dim != r.inputs.mean.size() ||
      r.svr.coefficients.size() != r.svr.support_vectors.rows() ||
      (r.svr.support_vectors.rows() > 0 && r.svr.support_vectors.cols() != r.svr.dim))
    fail(ErrorCode::ModelIncompatible, "model: regressor dimensions are inconsistent");
  return r;
}

}  // namespace

json model_to_json(const TrainedModel& model) {
  const auto& s = model.sources;
  return json{
      {"format_version", model.format_version},
      {"layout",
       {{"row_version", CellFeatureRow::kLayoutVersion},
        {"row_size", CellFeatureRow::kSize},
        {"descriptor_version", kDescriptorVersion},
        {"glcm_order", "theta(0,45,90,135) x (dissimilarity,homogeneity,energy,entropy)"},
        {"wavelet_order", "LL3,LH3,HL3,HH3,LH2,HL2,HH2,LH1,HL1,HH1"}}},
      {"config", model.config.to_json()},
      {"config_hash", hex64(model.config_hash)},
      {"codebook", {{"K", s.codebook.size()}, {"centroids", matrix_json(s.codebook.centroids)}}},
      {"rates", {{"lambda_plus", s.rates.lambda_plus}, {"lambda_minus", s.rates.lambda_minus}}},
      {"interest", regressor_json(s.interest)},
      {"glcm", regressor_json(s.glcm)},
      {"wavelet", regressor_json(s.wavelet)},
      {"head", {{"window", s.head.window}, {"weights", s.head.weights}, {"bias", s.head.bias}}},
      {"fusion", regressor_json(model.fusion)},
  };
}

TrainedModel model_from_json(const json& j) {
  TrainedModel m;
  try {
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kModelFormatVersion)
      fail(ErrorCode::ModelIncompatible, "model: format version " + std::to_string(m.format_version) +
                                             " is not supported (expected " + std::to_string(kModelFormatVersion) + ")");
    const auto& layout = j.at("layout");
    if (layout.at("row_version").get<int>() != CellFeatureRow::kLayoutVersion ||
        layout.at("row_size").get<std::size_t>() != CellFeatureRow::kSize ||
        layout.at("descriptor_version").get<int>() != kDescriptorVersion)
      fail(ErrorCode::ModelIncompatible, "model: feature layout does not match this build");
    try {
      m.config = Config::from_json(j.at("config"));
    } catch (const Error& e) {
      fail(ErrorCode::ModelIncompatible, std::string("model: stored config invalid: ") + e.what());
    }
    const auto hash_text = j.at("config_hash").get<std::string>();
    m.config_hash = std::stoull(hash_text, nullptr, 16);
    auto& s = m.sources;
    s.codebook.centroids = matrix_from(j.at("codebook").at("centroids"));
    s.rates.lambda_plus = j.at("rates").at("lambda_plus").get<std::vector<double>>();
    s.rates.lambda_minus = j.at("rates").at("lambda_minus").get<std::vector<double>>();
    s.interest = regressor_from(j.at("interest"));
    s.glcm = regressor_from(j.at("glcm"));
    s.wavelet = regressor_from(j.at("wavelet"));
    s.head.window = j.at("head").at("window").get<std::size_t>();
    s.head.weights = j.at("head").at("weights").get<std::vector<double>>();
    s.head.bias = j.at("head").at("bias").get<double>();
    m.fusion = regressor_from(j.at("fusion"));
  } catch (const json::exception& e) {
    fail(ErrorCode::ModelIncompatible, std::string("model: malformed file: ") + e.what());
  } catch (const std::logic_error& e) {
    fail(ErrorCode::ModelIncompatible, std::string("model: malformed file: ") + e.what());
  }
  check_consistent(m);
  return m;
}

std::string serialize_model(const TrainedModel& model) { return model_to_json(model).dump() + "\n"; }

TrainedModel deserialize_model(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ModelIncompatible, std::string("model: not valid JSON: ") + e.what());
  }
  return model_from_json(j);
}

void save_model(const TrainedModel& model, const std::string& path) { write_file_atomic(path, serialize_model(model)); }

TrainedModel load_model(const std::string& path) { return deserialize_model(read_file(path)); }

std::uint64_t model_digest(const TrainedModel& model) { return fnv1a64(serialize_model(model)); }

void write_file_atomic(const std::string& path, std::string_view contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    if (ec) fail(ErrorCode::Io, "cannot create directory '" + target.parent_path().string() + "': " + ec.message());
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot write '" + tmp.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) fail(ErrorCode::Io, "write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorCode::Io, "cannot rename into '" + path + "'");
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace crowdcount
