#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "crowdcount/imaging.hpp"
#include "oracles/gradient_oracle.hpp"
#include "unit/test_util.hpp"

using namespace crowdcount;

namespace {

ErrorCode decode_error(std::string_view bytes) {
  try {
    decode_image(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

std::string bytes(std::initializer_list<int> values) {
  std::string s;
  for (int v : values) s.push_back(static_cast<char>(v));
  return s;
}

}  // namespace

TEST(Decode, P5ScalesToUnitRange) {
  const auto img = decode_image("P5\n2 2\n255\n" + bytes({0, 255, 128, 64}));
  ASSERT_EQ(img.width(), 2u);
  ASSERT_EQ(img.height(), 2u);
  EXPECT_EQ(img.at(0, 0), 0.0);
  EXPECT_EQ(img.at(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(img.at(1, 0), 128.0 / 255.0);
  EXPECT_DOUBLE_EQ(img.at(1, 1), 64.0 / 255.0);
}

TEST(Decode, P6WhiteIsOne) {
  EXPECT_DOUBLE_EQ(decode_image("P6 1 1 255\n" + bytes({255, 255, 255})).at(0, 0), 1.0);
  const auto img = decode_image("P6 1 1 255\n" + bytes({10, 200, 30}));
  EXPECT_NEAR(img.at(0, 0), (0.299 * 10 + 0.587 * 200 + 0.114 * 30) / 255.0, 1e-15);
}

TEST(Decode, CommentsAreSkipped) {
  const auto img = decode_image("P5\n# made by hand\n1 # width\n1\n255\n" + bytes({51}));
  EXPECT_DOUBLE_EQ(img.at(0, 0), 0.2);
}

TEST(Decode, ErrorsAreDistinct) {
  EXPECT_EQ(decode_error("P5\n4 4\n255\n" + bytes({1, 2, 3})), ErrorCode::TruncatedPayload);
  EXPECT_EQ(decode_error("P5\n2 2\n65535\n" + std::string(8, '\0')), ErrorCode::UnsupportedMaxval);
  EXPECT_EQ(decode_error("P5\n2 2\n15\n" + std::string(4, '\0')), ErrorCode::UnsupportedMaxval);
  EXPECT_EQ(decode_error("P2\n2 2\n255\n0 0 0 0"), ErrorCode::MalformedHeader);
  EXPECT_EQ(decode_error("P5\nx 2\n255\n"), ErrorCode::MalformedHeader);
  EXPECT_EQ(decode_error("P5\n0 2\n255\n"), ErrorCode::MalformedHeader);
  EXPECT_EQ(decode_error(""), ErrorCode::MalformedHeader);
}

TEST(Decode, EncodeRoundTripIsExactAtEightBits) {
  Rng rng(4);
  GrayImage img(13, 7);
  for (double& v : img.pixels()) v = static_cast<double>(rng.index(256)) / 255.0;
  EXPECT_EQ(decode_image(encode_pgm(img)), img);
}

TEST(Gradient, ConstantIsZero) {
  const auto g = gradient_magnitude(GrayImage(9, 6, 0.7));
  for (double v : g.pixels()) EXPECT_EQ(v, 0.0);
}

TEST(Gradient, StepEdgeGivesBandAtEdge) {
  GrayImage img(12, 5);
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 6; c < 12; ++c) img.at(r, c) = 1.0;
  const auto g = gradient_magnitude(img);
  for (std::size_t r = 0; r < 5; ++r) {
    EXPECT_EQ(g.at(r, 5), 0.5);
    EXPECT_EQ(g.at(r, 6), 0.5);
    EXPECT_EQ(g.at(r, 0), 0.0);
    EXPECT_EQ(g.at(r, 3), 0.0);
    EXPECT_EQ(g.at(r, 9), 0.0);
    EXPECT_EQ(g.at(r, 11), 0.0);
  }
}

TEST(Gradient, MatchesLoopOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto img = testutil::random_image(5 + seed % 3, 5 + seed % 2, seed);
    const auto mine = gradient_magnitude(img);
    const auto ref = oracle::gradient_magnitude(testutil::to_rows(img));
    for (std::size_t r = 0; r < img.height(); ++r)
      for (std::size_t c = 0; c < img.width(); ++c) EXPECT_NEAR(mine.at(r, c), ref[r][c], 1e-12);
  }
}

TEST(Gradient, InteriorIsTranslationEquivariant) {
  const auto big = testutil::random_image(20, 20, 1);
  const auto g = gradient_magnitude(big);
  const CellRect window{3, 4, 12, 11};
  const auto g_crop = gradient_magnitude(crop(big, window));
  for (std::size_t r = 1; r + 1 < window.height; ++r)
    for (std::size_t c = 1; c + 1 < window.width; ++c)
      EXPECT_DOUBLE_EQ(g_crop.at(r, c), g.at(r + window.row, c + window.col));
}

TEST(Gradient, PatchKeepsOrigin) {
  const Patch p{CellRect{2, 3, 4, 4}, testutil::random_image(4, 4, 2)};
  const Patch g = gradient_magnitude(p);
  EXPECT_EQ(g.rect, p.rect);
  EXPECT_EQ(g.pixels.width(), 4u);
}

TEST(Partition, ExactTiling) {
  const auto patches = partition(GrayImage(256, 256), GridSpec{128});
  ASSERT_EQ(patches.size(), 4u);
  const std::vector<std::pair<std::size_t, std::size_t>> origins{{0, 0}, {0, 128}, {128, 0}, {128, 128}};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(patches[i].rect.row, origins[i].first);
    EXPECT_EQ(patches[i].rect.col, origins[i].second);
    EXPECT_EQ(patches[i].rect.area(), 128u * 128u);
  }
}

TEST(Partition, RaggedEdgesCoverEveryPixelOnce) {
  for (std::size_t w : {300u, 64u, 129u, 191u, 192u, 193u, 500u})
    for (std::size_t h : {300u, 40u, 257u}) {
      const auto cells = grid_cells(w, h, GridSpec{128});
      std::vector<int> hits(w * h, 0);
      std::size_t area = 0;
      for (const auto& c : cells) {
        area += c.area();
        for (std::size_t r = c.row; r < c.row + c.height; ++r)
          for (std::size_t col = c.col; col < c.col + c.width; ++col) ++hits[r * w + col];
        EXPECT_GE(c.width, std::min<std::size_t>(w, 64));
        EXPECT_GE(c.height, std::min<std::size_t>(h, 64));
      }
      EXPECT_EQ(area, w * h);
      EXPECT_TRUE(std::all_of(hits.begin(), hits.end(), [](int n) { return n == 1; }));
    }
}

TEST(Partition, RemainderPolicy) {
  // 300 = 2 x 128 + 44; 44 < 64 merges into the last cell.
  const auto spans = split_axis(300, 128);
  ASSERT_EQ(spans.size(), 2u);
  EXPECT_EQ(spans[1], (std::pair<std::size_t, std::size_t>{128, 172}));
  // 320 = 2 x 128 + 64; a half-cell remainder stands alone.
  EXPECT_EQ(split_axis(320, 128).size(), 3u);
  const auto area = [](const std::vector<CellRect>& cells) {
    std::size_t a = 0;
    for (const auto& c : cells) a += c.area();
    return a;
  };
  EXPECT_EQ(area(grid_cells(300, 300, GridSpec{128})), 90000u);
}

TEST(Partition, SmallImageIsOnePatch) {
  const auto patches = partition(GrayImage(64, 64), GridSpec{128});
  ASSERT_EQ(patches.size(), 1u);
  EXPECT_EQ(patches[0].rect, (CellRect{0, 0, 64, 64}));
}

TEST(Partition, RejectsTinyImageAndCell) {
  EXPECT_THROW(partition(GrayImage(10, 64), GridSpec{128}), Error);
  EXPECT_THROW(partition(GrayImage(256, 256), GridSpec{16}), Error);
}

TEST(Moments, ConstantIsDegenerate) {
  const std::vector<double> v(50, 5.0);
  const auto s = moment_stats(v);
  EXPECT_EQ(s.mean, 5.0);
  EXPECT_EQ(s.variance, 0.0);
  EXPECT_EQ(s.entropy, 0.0);
  EXPECT_EQ(s.skewness, 0.0);
  EXPECT_EQ(s.kurtosis, 0.0);
}

TEST(Moments, TwoEqualBinsGiveLn2) {
  const std::vector<double> v{0, 1, 0, 1, 1, 0};
  EXPECT_NEAR(moment_stats(v).entropy, std::log(2.0), 1e-15);
}

TEST(Moments, MatchDirectSummation) {
  Rng rng(12);
  std::vector<double> v(1000);
  for (double& x : v) x = std::exp(0.5 * rng.normal());  // skewed, heavy right tail
  const auto s = moment_stats(v);

  const double n = static_cast<double>(v.size());
  double m = 0.0;
  for (double x : v) m += x / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : v) {
    m2 += std::pow(x - m, 2) / n;
    m3 += std::pow(x - m, 3) / n;
    m4 += std::pow(x - m, 4) / n;
  }
  EXPECT_NEAR(s.mean, m, 1e-12);
  EXPECT_NEAR(s.variance, m2, 1e-12);
  EXPECT_NEAR(s.skewness, m3 / std::pow(m2, 1.5), 1e-9);
  EXPECT_NEAR(s.kurtosis, m4 / (m2 * m2) - 3.0, 1e-9);

  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  std::vector<double> bins(256, 0.0);
  for (double x : v) bins[std::min<std::size_t>(255, static_cast<std::size_t>((x - *lo) / (*hi - *lo) * 256))] += 1;
  double h = 0.0;
  for (double b : bins)
    if (b > 0) h -= b / n * std::log(b / n);
  EXPECT_NEAR(s.entropy, h, 1e-12);
  EXPECT_GE(s.entropy, 0.0);
}

TEST(Moments, PermutationInvariant) {
  Rng rng(3);
  std::vector<double> v(200);
  for (double& x : v) x = rng.uniform();
  const auto a = moment_stats(v);
  rng.shuffle(v.begin(), v.end());
  const auto b = moment_stats(v);
  EXPECT_NEAR(a.mean, b.mean, 1e-15);
  EXPECT_NEAR(a.variance, b.variance, 1e-15);
  EXPECT_NEAR(a.skewness, b.skewness, 1e-12);
  EXPECT_NEAR(a.kurtosis, b.kurtosis, 1e-12);
  EXPECT_EQ(a.entropy, b.entropy);
}

TEST(Blur, PreservesConstantAndMean) {
  const auto c = gaussian_blur(GrayImage(17, 11, 0.3), 1.7);
  for (double v : c.pixels()) EXPECT_NEAR(v, 0.3, 1e-15);
}

TEST(Resize, IdentityAndConstant) {
  const auto img = testutil::random_image(9, 7, 8);
  EXPECT_EQ(resize_bilinear(img, 9, 7), img);
  const auto resized = resize_bilinear(GrayImage(8, 8, 0.25), 13, 5);
  for (double v : resized.pixels()) EXPECT_NEAR(v, 0.25, 1e-15);
}

TEST(GrayImageType, RejectsBadData) {
  EXPECT_THROW(GrayImage(2, 2, std::vector<double>(3)), Error);
  EXPECT_THROW(GrayImage(1, 1, std::vector<double>{std::nan("")}), Error);
}
