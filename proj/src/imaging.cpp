#include "crowdcount/imaging.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "crowdcount/error.hpp"

namespace crowdcount {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::MalformedHeader: return "malformed header";
    case ErrorCode::TruncatedPayload: return "truncated payload";
    case ErrorCode::UnsupportedMaxval: return "unsupported maxval";
    case ErrorCode::Parse: return "parse error";
    case ErrorCode::Validation: return "validation error";
    case ErrorCode::Io: return "i/o error";
    case ErrorCode::Config: return "config error";
    case ErrorCode::ModelIncompatible: return "model incompatible";
    case ErrorCode::InsufficientData: return "insufficient data";
  }
  return "error";
}

GrayImage::GrayImage(std::size_t width, std::size_t height, double fill)
    : width_(width), height_(height), data_(width * height, fill) {}

GrayImage::GrayImage(std::size_t width, std::size_t height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  require(data_.size() == width_ * height_, "GrayImage: data length != width * height");
  for (double v : data_) require(std::isfinite(v), "GrayImage: non-finite intensity");
}

// ---------------------------------------------------------------------------
// PNM

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::size_t read_uint(const char* field) {
    skip_space_and_comments();
    std::size_t value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
      if (value > (1u << 30)) fail(ErrorCode::MalformedHeader, std::string("PNM: ") + field + " too large");
      ++pos_;
      ++digits;
    }
    if (digits == 0) fail(ErrorCode::MalformedHeader, std::string("PNM: missing ") + field);
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  void expect_single_space() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_])))
      fail(ErrorCode::MalformedHeader, "PNM: missing whitespace after maxval");
    ++pos_;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

GrayImage decode_image(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    fail(ErrorCode::MalformedHeader, "PNM: expected P5 or P6 magic");
  const bool rgb = bytes[1] == '6';

  HeaderReader reader(bytes);
  reader.advance(2);
  const std::size_t width = reader.read_uint("width");
  const std::size_t height = reader.read_uint("height");
  const std::size_t maxval = reader.read_uint("maxval");
  if (width == 0 || height == 0) fail(ErrorCode::MalformedHeader, "PNM: zero image dimension");
  if (maxval != 255)
    fail(ErrorCode::UnsupportedMaxval, "PNM: maxval " + std::to_string(maxval) + " (only 255 supported)");
  reader.expect_single_space();

  const std::size_t channels = rgb ? 3 : 1;
  const std::size_t need = width * height * channels;
  const std::size_t have = bytes.size() - reader.pos();
  if (have < need)
    fail(ErrorCode::TruncatedPayload,
         "PNM: payload has " + std::to_string(have) + " bytes, need " + std::to_string(need));

  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data() + reader.pos());
  std::vector<double> data(width * height);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (rgb) {
      const double r = raw[3 * i], g = raw[3 * i + 1], b = raw[3 * i + 2];
      data[i] = (0.299 * r + 0.587 * g + 0.114 * b) / 255.0;
    } else {
      data[i] = raw[i] / 255.0;
    }
  }
  return GrayImage(width, height, std::move(data));
}

GrayImage read_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open image '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_image(bytes);
}

std::string encode_pgm(const GrayImage& img) {
  std::string out = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  out.reserve(out.size() + img.size());
  for (double v : img.pixels()) {
    const double c = std::clamp(v, 0.0, 1.0);
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(c * 255.0))));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pixel operations

GrayImage gradient_magnitude(const GrayImage& img) {
  const std::size_t w = img.width(), h = img.height();
  require(w >= 2 && h >= 2, "gradient_magnitude: image must be at least 2x2");
  GrayImage out(w, h);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      double gx, gy;
      if (c == 0) gx = img.at(r, 1) - img.at(r, 0);
      else if (c == w - 1) gx = img.at(r, c) - img.at(r, c - 1);
      else gx = 0.5 * (img.at(r, c + 1) - img.at(r, c - 1));
      if (r == 0) gy = img.at(1, c) - img.at(0, c);
      else if (r == h - 1) gy = img.at(r, c) - img.at(r - 1, c);
      else gy = 0.5 * (img.at(r + 1, c) - img.at(r - 1, c));
      out.at(r, c) = std::sqrt(gx * gx + gy * gy);
    }
  }
  return out;
}

Patch gradient_magnitude(const Patch& patch) {
  return Patch{patch.rect, gradient_magnitude(patch.pixels)};
}

std::vector<std::pair<std::size_t, std::size_t>> split_axis(std::size_t length,
                                                            std::size_t cell_size) {
  require(cell_size > 0, "split_axis: zero cell size");
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  const std::size_t full = length / cell_size;
  const std::size_t rem = length % cell_size;
  if (full == 0) {
    spans.emplace_back(0, length);
    return spans;
  }
  for (std::size_t i = 0; i < full; ++i) spans.emplace_back(i * cell_size, cell_size);
  if (rem > 0) {
    if (2 * rem < cell_size) spans.back().second += rem;
    else spans.emplace_back(full * cell_size, rem);
  }
  return spans;
}

std::vector<CellRect> grid_cells(std::size_t width, std::size_t height, const GridSpec& grid) {
  if (grid.cell_size < kMinGridCellSize)
    fail(ErrorCode::InvalidArgument, "grid: cell_size must be >= " + std::to_string(kMinGridCellSize));
  if (width < kMinCellSide || height < kMinCellSide)
    fail(ErrorCode::InvalidArgument, "grid: image " + std::to_string(width) + "x" + std::to_string(height) +
                                         " is smaller than the minimum cell side " +
                                         std::to_string(kMinCellSide));
  const auto rows = split_axis(height, grid.cell_size);
  const auto cols = split_axis(width, grid.cell_size);
  std::vector<CellRect> cells;
  cells.reserve(rows.size() * cols.size());
  for (const auto& [r0, rh] : rows)
    for (const auto& [c0, cw] : cols) cells.push_back(CellRect{r0, c0, rh, cw});
  return cells;
}

std::vector<CellRect> sample_cells(std::size_t width, std::size_t height, std::size_t cell_size,
                                   std::size_t stride) {
  require(cell_size > 0 && stride > 0, "sample_cells: cell size and stride must be positive");
  auto positions = [&](std::size_t length) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    if (length <= cell_size) {
      out.emplace_back(0, length);
      return out;
    }
    for (std::size_t p = 0; p + cell_size <= length; p += stride) out.emplace_back(p, cell_size);
    return out;
  };
  std::vector<CellRect> cells;
  for (const auto& [r0, rh] : positions(height))
    for (const auto& [c0, cw] : positions(width)) cells.push_back(CellRect{r0, c0, rh, cw});
  return cells;
}

GrayImage crop(const GrayImage& img, const CellRect& rect) {
  require(rect.row + rect.height <= img.height() && rect.col + rect.width <= img.width(),
          "crop: rectangle outside image");
  GrayImage out(rect.width, rect.height);
  for (std::size_t r = 0; r < rect.height; ++r)
    for (std::size_t c = 0; c < rect.width; ++c) out.at(r, c) = img.at(rect.row + r, rect.col + c);
  return out;
}

std::vector<Patch> partition(const GrayImage& img, const GridSpec& grid) {
  std::vector<Patch> patches;
  for (const auto& rect : grid_cells(img.width(), img.height(), grid))
    patches.push_back(Patch{rect, crop(img, rect)});
  return patches;
}

GrayImage resize_bilinear(const GrayImage& img, std::size_t width, std::size_t height) {
  require(width > 0 && height > 0 && !img.empty(), "resize_bilinear: empty size");
  GrayImage out(width, height);
  const double sx = static_cast<double>(img.width()) / static_cast<double>(width);
  const double sy = static_cast<double>(img.height()) / static_cast<double>(height);
  const double max_x = static_cast<double>(img.width() - 1);
  const double max_y = static_cast<double>(img.height() - 1);
  for (std::size_t r = 0; r < height; ++r) {
    const double y = std::clamp((static_cast<double>(r) + 0.5) * sy - 0.5, 0.0, max_y);
    const auto y0 = static_cast<std::size_t>(y);
    const std::size_t y1 = std::min(y0 + 1, img.height() - 1);
    const double fy = y - static_cast<double>(y0);
    for (std::size_t c = 0; c < width; ++c) {
      const double x = std::clamp((static_cast<double>(c) + 0.5) * sx - 0.5, 0.0, max_x);
      const auto x0 = static_cast<std::size_t>(x);
      const std::size_t x1 = std::min(x0 + 1, img.width() - 1);
      const double fx = x - static_cast<double>(x0);
      const double top = img.at(y0, x0) * (1 - fx) + img.at(y0, x1) * fx;
      const double bot = img.at(y1, x0) * (1 - fx) + img.at(y1, x1) * fx;
      out.at(r, c) = top * (1 - fy) + bot * fy;
    }
  }
  return out;
}

namespace {

// Half-sample symmetric reflection of an arbitrary index into [0, n).
std::size_t reflect(long i, long n) {
  const long period = 2 * n;
  long m = i % period;
  if (m < 0) m += period;
  return static_cast<std::size_t>(m < n ? m : period - 1 - m);
}

}  // namespace

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
  if (sigma <= 0.0) return img;
  const long radius = std::max(1L, static_cast<long>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (long k = -radius; k <= radius; ++k) {
    const double v = std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma));
    kernel[static_cast<std::size_t>(k + radius)] = v;
    sum += v;
  }
  for (double& v : kernel) v /= sum;

  const long w = static_cast<long>(img.width()), h = static_cast<long>(img.height());
  const auto taps = kernel.size();
  // Horizontal pass through a reflected scratch row.
  GrayImage tmp(img.width(), img.height());
  std::vector<double> line(static_cast<std::size_t>(w + 2 * radius));
  for (long r = 0; r < h; ++r) {
    for (long c = -radius; c < w + radius; ++c)
      line[static_cast<std::size_t>(c + radius)] = img.at(static_cast<std::size_t>(r), reflect(c, w));
    for (long c = 0; c < w; ++c) {
      const double* src = line.data() + c;
      double acc = 0.0;
      for (std::size_t k = 0; k < taps; ++k) acc += kernel[k] * src[k];
      tmp.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = acc;
    }
  }
  // Vertical pass accumulates whole rows.
  GrayImage out(img.width(), img.height());
  const auto uw = static_cast<std::size_t>(w);
  for (long r = 0; r < h; ++r) {
    double* dst = out.pixels().data() + static_cast<std::size_t>(r) * uw;
    for (long k = -radius; k <= radius; ++k) {
      const double wk = kernel[static_cast<std::size_t>(k + radius)];
      const double* src = tmp.pixels().data() + reflect(r + k, h) * uw;
      for (std::size_t c = 0; c < uw; ++c) dst[c] += wk * src[c];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Statistics

MomentStats moment_stats(std::span<const double> values) {
  require(!values.empty(), "moment_stats: empty input");
  const auto n = static_cast<double>(values.size());
  double mean = 0.0, lo = values[0], hi = values[0], scale = 0.0;
  for (double v : values) {
    mean += v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    scale = std::max(scale, std::abs(v));
  }
  mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : values) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;

  MomentStats s;
  s.mean = mean;
  const double floor = 1e-14 * scale;
  if (hi - lo <= 0.0 || m2 <= floor * floor) return s;  // degenerate: all higher moments 0

  s.variance = m2;
  s.skewness = m3 / std::pow(m2, 1.5);
  s.kurtosis = m4 / (m2 * m2) - 3.0;

  std::array<std::size_t, 256> hist{};
  const double range = hi - lo;
  for (double v : values) {
    const auto bin = static_cast<std::size_t>(std::min(255.0, std::floor((v - lo) / range * 256.0)));
    ++hist[bin];
  }
  double entropy = 0.0;
  for (std::size_t count : hist) {
    if (count == 0) continue;
    const double p = static_cast<double>(count) / n;
    entropy -= p * std::log(p);
  }
  s.entropy = entropy;
  return s;
}

}  // namespace crowdcount
