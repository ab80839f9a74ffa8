// Acceptance suite: one PASS/FAIL line per criterion. Usage: acceptance [work_dir]
#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "crowdcount/cli.hpp"
#include "crowdcount/dataset.hpp"
#include "crowdcount/fft.hpp"
#include "crowdcount/fourier.hpp"
#include "crowdcount/glcm.hpp"
#include "crowdcount/interest.hpp"
#include "crowdcount/learn/svr.hpp"
#include "crowdcount/model_io.hpp"
#include "crowdcount/pipeline.hpp"
#include "crowdcount/rng.hpp"
#include "crowdcount/synth.hpp"
#include "crowdcount/wavelet.hpp"
#include "oracles/glcm_oracle.hpp"
#include "oracles/haar_oracle.hpp"
#include "oracles/metrics_oracle.hpp"
#include "oracles/poisson_oracle.hpp"
#include "oracles/svr_oracle.hpp"

using namespace crowdcount;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects failed checks; the first few are reported.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (failures_ <= 3) notes_ += (notes_.empty() ? "" : "; ") + what;
  }
  Outcome done(const std::string& summary) const {
    if (failures_ == 0) return {true, summary};
    return {false, std::to_string(failures_) + " failed check(s): " + notes_};
  }

 private:
  int failures_ = 0;
  std::string notes_;
};

std::string fmt(double v, const char* spec = "%.3g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

GrayImage random_image(std::size_t w, std::size_t h, Rng& rng) {
  GrayImage img(w, h);
  for (double& v : img.pixels()) v = rng.uniform();
  return img;
}

std::vector<std::vector<double>> to_rows(const GrayImage& img) {
  std::vector<std::vector<double>> rows(img.height(), std::vector<double>(img.width()));
  for (std::size_t r = 0; r < img.height(); ++r)
    for (std::size_t c = 0; c < img.width(); ++c) rows[r][c] = img.at(r, c);
  return rows;
}

GrayImage blob_lattice(std::size_t side, std::size_t per_axis, double sigma) {
  GrayImage img(side, side);
  const double spacing = static_cast<double>(side) / static_cast<double>(per_axis);
  for (std::size_t i = 0; i < per_axis; ++i)
    for (std::size_t j = 0; j < per_axis; ++j)
      for (std::size_t r = 0; r < side; ++r)
        for (std::size_t c = 0; c < side; ++c) {
          const double dy = static_cast<double>(r) - spacing * (static_cast<double>(i) + 0.5);
          const double dx = static_cast<double>(c) - spacing * (static_cast<double>(j) + 0.5);
          img.at(r, c) += std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
        }
  return img;
}

int run_cli(const std::vector<std::string>& args, std::string* out_text = nullptr) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (out_text) *out_text = out.str();
  if (code != 0) std::fprintf(stderr, "  crowdcount %s -> exit %d: %s", args[0].c_str(), code, err.str().c_str());
  return code;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  return rows;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// --- 1 ------------------------------------------------------------------------

Outcome glcm_oracle_equivalence() {
  Checks ck;
  Rng rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int levels = std::array<int, 3>{2, 4, 8}[trial % 3];
    const std::size_t w = 2 + rng.index(15), h = 2 + rng.index(15);
    std::vector<std::vector<int>> rows(h, std::vector<int>(w));
    LevelGrid grid{w, h, {}};
    for (auto& r : rows)
      for (int& v : r) {
        v = static_cast<int>(rng.index(static_cast<std::uint64_t>(levels)));
        grid.levels.push_back(v);
      }
    const auto fast = glcm_features(grid, levels);
    const auto ref = oracle::glcm_all(rows, levels);
    for (std::size_t t = 0; t < 4; ++t) {
      const auto& a = fast.directions[t];
      const auto& b = ref[t];
      for (double d : {a.dissimilarity - b.dissimilarity, a.homogeneity - b.homogeneity, a.energy - b.energy,
                       a.entropy - b.entropy})
        worst = std::max(worst, std::abs(d));
    }
  }
  ck.expect(worst <= 1e-12, "max deviation " + fmt(worst));

  const LevelGrid worked{3, 3, {0, 0, 1, 0, 1, 1, 2, 2, 2}};
  const auto d = glcm_features(worked, 3).directions[0];
  ck.expect(d.dissimilarity == 1.0 / 3.0, "D = " + fmt(d.dissimilarity, "%.17g"));
  ck.expect(std::abs(d.homogeneity - 5.0 / 6.0) <= 1e-15, "H = " + fmt(d.homogeneity, "%.17g"));
  ck.expect(std::abs(d.energy - 10.0 / 36.0) <= 1e-15, "E = " + fmt(d.energy, "%.17g"));
  ck.expect(std::abs(d.entropy - 1.3297) <= 5e-5, "P = " + fmt(d.entropy, "%.6f"));
  return ck.done("200 grids, max |fast - oracle| " + fmt(worst) + "; worked 3x3: D " + fmt(d.dissimilarity, "%.6f") +
                 " H " + fmt(d.homogeneity, "%.6f") + " E " + fmt(d.energy, "%.6f") + " P " +
                 fmt(d.entropy, "%.4f"));
}

// --- 2 ------------------------------------------------------------------------

Outcome wavelet_correctness() {
  Checks ck;
  for (double c : {0.0, 0.25, 0.3, 0.7, 1.0})
    for (std::size_t side : {16u, 40u, 64u, 128u}) {
      const auto f = wavelet_features(GrayImage(side, side, c));
      ck.expect(f.energies[0] == 8.0 * c, "LL3 of constant " + fmt(c) + " is " + fmt(f.energies[0], "%.17g"));
      for (std::size_t b = 1; b < kSubbandCount; ++b) ck.expect(f.energies[b] == 0.0, "nonzero detail band");
    }

  Rng rng(202);
  double parseval = 0.0, bank = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t w = 16 + 2 * rng.index(40), h = 16 + 2 * rng.index(40);
    const auto img = random_image(w, h, rng);
    double pixels = 0.0, coeffs = 0.0;
    for (double v : img.pixels()) pixels += v * v;
    for (const auto& band : haar_pyramid(img))
      for (double v : band.pixels()) coeffs += v * v;
    // Parseval holds exactly only when every level splits evenly.
    if (w % 8 == 0 && h % 8 == 0) parseval = std::max(parseval, std::abs(coeffs - pixels) / pixels);

    const auto odd = random_image(16 + rng.index(50), 16 + rng.index(50), rng);
    for (const auto* p : {&img, &odd}) {
      const auto mine = wavelet_features(*p).energies;
      const auto ref = oracle::haar_energies(to_rows(*p));
      for (std::size_t b = 0; b < kSubbandCount; ++b) bank = std::max(bank, std::abs(mine[b] - ref[b]));
    }
  }
  for (std::size_t side : {32u, 64u, 128u}) {
    const auto img = random_image(side, side, rng);
    double pixels = 0.0, coeffs = 0.0;
    for (double v : img.pixels()) pixels += v * v;
    for (const auto& band : haar_pyramid(img))
      for (double v : band.pixels()) coeffs += v * v;
    parseval = std::max(parseval, std::abs(coeffs - pixels) / pixels);
  }
  ck.expect(parseval <= 1e-9, "Parseval relative error " + fmt(parseval));
  ck.expect(bank <= 1e-10, "filter-bank deviation " + fmt(bank));
  return ck.done("constant spectra exact; Parseval rel err " + fmt(parseval) + "; filter-bank max dev " + fmt(bank));
}

// --- 3 ------------------------------------------------------------------------

Outcome fourier_checks() {
  Checks ck;
  Rng rng(303);
  double roundtrip = 0.0;
  for (std::size_t n : {16u, 30u, 64u, 127u, 128u, 192u}) {
    std::vector<fft::Complex> x(n);
    for (auto& v : x) v = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    auto y = x;
    fft::transform(y, false);
    fft::transform(y, true);
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      err = std::max(err, std::abs(y[i] - x[i]));
      scale = std::max(scale, std::abs(x[i]));
    }
    roundtrip = std::max(roundtrip, err / scale);
  }
  for (auto [w, h] : {std::pair<std::size_t, std::size_t>{64, 64}, {48, 40}, {128, 96}}) {
    std::vector<fft::Complex> x(w * h);
    for (auto& v : x) v = {rng.uniform(), 0.0};
    auto y = x;
    fft::transform_2d(y, w, h, false);
    fft::transform_2d(y, w, h, true);
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      err = std::max(err, std::abs(y[i] - x[i]));
      scale = std::max(scale, std::abs(x[i]));
    }
    roundtrip = std::max(roundtrip, err / scale);
  }
  ck.expect(roundtrip <= 1e-9, "roundtrip relative error " + fmt(roundtrip));

  const double peaks = fourier_analyze(blob_lattice(64, 4, 2.0), FourierParams{0.25, 0.5}).maxima_count;
  ck.expect(peaks == 16.0, "lattice gave " + fmt(peaks) + " peaks");

  std::size_t families = 0;
  for (std::size_t side : {32u, 64u, 96u, 128u})
    for (double sigma : {1.5, 2.0, 2.5}) {
      const GrayImage img = blob_lattice(side, side / 16, sigma);
      double previous = std::numeric_limits<double>::infinity();
      for (double cutoff : {1.0, 0.5, 0.25}) {
        const double n = fourier_analyze(img, FourierParams{cutoff, 0.5}).maxima_count;
        ck.expect(n <= previous, "peaks rose at cutoff " + fmt(cutoff) + " (" + std::to_string(side) + " px)");
        previous = n;
      }
      ++families;
    }
  return ck.done("FFT roundtrip rel err " + fmt(roundtrip) + "; lattice peaks " + fmt(peaks) +
                 "; non-increasing over cutoffs 1, 0.5, 0.25 on " + std::to_string(families) + " lattices");
}

// --- 4 ------------------------------------------------------------------------

Outcome poisson_confidence() {
  Checks ck;
  Rng rng(404);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t K = 1 + rng.index(50);
    PoissonRates rates;
    std::vector<std::uint32_t> k(K);
    for (std::size_t i = 0; i < K; ++i) {
      rates.lambda_plus.push_back(rng.uniform(0.01, 25.0));
      rates.lambda_minus.push_back(rng.uniform(0.01, 25.0));
      k[i] = static_cast<std::uint32_t>(rng.index(40));
    }
    const double mine = crowd_confidence(WordHistogram{k}, rates);
    const double ref = oracle::log_likelihood_ratio(k, rates.lambda_plus, rates.lambda_minus);
    worst = std::max(worst, std::abs(mine - ref) / std::max(1.0, std::abs(ref)));

    PoissonRates same{rates.lambda_plus, rates.lambda_plus};
    ck.expect(crowd_confidence(WordHistogram{k}, same) == 0.0, "mu != 0 with equal rates");

    double parts = 0.0;
    for (std::size_t i = 0; i < K; ++i)
      parts += crowd_confidence(WordHistogram{{k[i]}}, PoissonRates{{rates.lambda_plus[i]}, {rates.lambda_minus[i]}});
    ck.expect(std::abs(parts - mine) <= 1e-9 * std::max(1.0, std::abs(mine)), "per-word sum differs");
  }
  ck.expect(worst <= 1e-9, "oracle deviation " + fmt(worst));
  const double example = crowd_confidence(WordHistogram{{3, 0}}, PoissonRates{{2.0, 1.0}, {0.5, 0.5}});
  ck.expect(std::abs(example - 2.1589) <= 5e-5, "worked example " + fmt(example, "%.6f"));
  return ck.done("100 instances, max rel dev from log-pmf oracle " + fmt(worst) +
                 "; equal rates give 0; one-word sums match; worked example " + fmt(example, "%.4f"));
}

// --- 5 ------------------------------------------------------------------------

oracle::Dense gram(const Matrix& x, const Kernel& k) {
  oracle::Dense g(x.rows(), std::vector<double>(x.rows()));
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.rows(); ++j) g[i][j] = k(x.row(i), x.row(j));
  return g;
}

std::vector<double> beta_by_row(const SvrModel& m, const Matrix& x) {
  std::vector<double> beta(x.rows(), 0.0);
  for (std::size_t s = 0; s < m.support_vectors.rows(); ++s)
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const auto a = m.support_vectors.row(s), b = x.row(i);
      if (std::equal(a.begin(), a.end(), b.begin())) beta[i] += m.coefficients[s];
    }
  return beta;
}

Outcome svr_checks() {
  Checks ck;
  Matrix line;
  for (double v : {0.0, 1.0, 2.0}) line.push_row(std::vector<double>{v});
  SvrParams lp;
  lp.kernel.type = KernelType::Linear;
  lp.C = 100.0;
  lp.epsilon = 0.01;
  const SvrModel lm = svr_fit(line, std::vector<double>{0.0, 2.0, 4.0}, lp);
  const double at = svr_predict(lm, std::vector<double>{1.5});
  ck.expect(at >= 2.9 && at <= 3.1, "predict(1.5) = " + fmt(at, "%.6f"));

  Rng rng(505);
  double worst_gap = 0.0, worst_kkt = 0.0;
  std::size_t free_svs = 0;
  for (int trial = 0; trial < 20; ++trial) {
    Matrix x;
    std::vector<double> y;
    for (int i = 0; i < 20; ++i) {
      const std::vector<double> r{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
      x.push_row(r);
      y.push_back(std::sin(r[0]) + 0.5 * r[2] + 0.3 * rng.normal());
    }
    SvrParams p;
    p.C = 5.0;
    p.epsilon = 0.1;
    p.kernel.gamma = 0.5;
    const SvrModel m = svr_fit(x, y, p);
    const auto beta = beta_by_row(m, x);
    double primal = 0.0;
    const double gap = oracle::duality_gap(gram(x, m.kernel), y, p.C, p.epsilon, beta, m.bias, &primal);
    worst_gap = std::max(worst_gap, gap / std::abs(primal));
    for (std::size_t i = 0; i < beta.size(); ++i) {
      if (beta[i] == 0.0 || std::abs(beta[i]) >= p.C - 1e-9) continue;
      ++free_svs;
      const double residual = y[i] - svr_predict(m, x.row(i));
      // beta > 0 pins the point to the upper edge, beta < 0 to the lower.
      const double edge = beta[i] > 0 ? p.epsilon : -p.epsilon;
      worst_kkt = std::max(worst_kkt, std::abs(residual - edge));
      ck.expect(std::abs(residual - edge) <= p.tol, "free SV off the tube edge by " + fmt(std::abs(residual - edge)));
    }
  }
  ck.expect(worst_gap <= 1e-3, "relative duality gap " + fmt(worst_gap));
  return ck.done("predict(1.5) = " + fmt(at, "%.4f") + "; max relative duality gap " + fmt(worst_gap) + "; " +
                 std::to_string(free_svs) + " free SVs within tol of the tube (max dev " + fmt(worst_kkt) + ")");
}

// --- 6 ------------------------------------------------------------------------

Outcome metrics_checks() {
  Checks ck;
  const auto hand = summarize(std::vector<double>{100, 200}, std::vector<double>{110, 180});
  ck.expect(hand.mean_ae == 15.0, "mu_AE = " + fmt(hand.mean_ae, "%.17g"));
  ck.expect(hand.mean_nae == 0.1, "mu_NAE = " + fmt(hand.mean_nae, "%.17g"));

  Rng rng(606);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> gt, est;
    const std::size_t n = 1 + rng.index(100);
    for (std::size_t i = 0; i < n; ++i) {
      gt.push_back(static_cast<double>(rng.index(800)));
      est.push_back(rng.uniform(0.0, 900.0));
    }
    const auto s = summarize(gt, est);
    const auto ref = oracle::errors(gt, est);
    for (auto [a, b] : {std::pair{s.mean_ae, ref.mean_ae}, {s.std_ae, ref.std_ae}, {s.mean_nae, ref.mean_nae},
                        {s.std_nae, ref.std_nae}})
      worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(b)));
    ck.expect(s.nae_n == ref.nae_n, "NAE row count differs");
  }
  ck.expect(worst <= 1e-12, "oracle deviation " + fmt(worst));
  return ck.done("hand example mu_AE " + fmt(hand.mean_ae) + ", mu_NAE " + fmt(hand.mean_nae) +
                 "; 100 random vectors, max rel dev " + fmt(worst));
}

// --- 7 ------------------------------------------------------------------------

Outcome end_to_end(const fs::path& work) {
  Checks ck;
  const fs::path dir = work / "e2e";
  fs::remove_all(dir);
  const auto synth = [&](const std::string& name, const std::string& count, const std::string& seed) {
    return run_cli({"synth", "-n", count, "--min-dots", "50", "--max-dots", "500", "--seed", seed, "-o",
                    (dir / name).string()});
  };
  if (synth("train", "40", "7001") != 0 || synth("test", "10", "7002") != 0) return {false, "synth failed"};
  const std::string model = (dir / "model.json").string();
  if (run_cli({"train", "-m", (dir / "train" / "manifest.json").string(), "-o", model, "--seed", "7"}) != 0)
    return {false, "train failed"};
  if (run_cli({"evaluate", "--model", model, "-m", (dir / "test" / "manifest.json").string(), "-o",
               (dir / "report").string()}) != 0)
    return {false, "evaluate failed"};

  const auto rows = read_csv(dir / "report" / "images.csv");
  std::vector<double> gt, est, nae;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    gt.push_back(std::stod(rows[i][1]));
    est.push_back(std::stod(rows[i][2]));
    if (!rows[i][4].empty()) nae.push_back(std::stod(rows[i][4]));
  }
  ck.expect(gt.size() == 10, std::to_string(gt.size()) + " test rows");
  const double mean_nae = nae.empty() ? INFINITY : std::accumulate(nae.begin(), nae.end(), 0.0) / nae.size();
  const double r = pearson(gt, est);
  ck.expect(mean_nae <= 0.25, "pooled mu_NAE " + fmt(mean_nae));
  ck.expect(r >= 0.9, "Pearson r " + fmt(r));
  return ck.done("40 train / 10 test, 50-500 blobs; mu_NAE " + fmt(mean_nae) + " (<= 0.25), Pearson r " + fmt(r) +
                 " (>= 0.9)");
}

// --- 8 ------------------------------------------------------------------------

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file()) files[e.path().filename().string()] = read_file(e.path().string());
  return files;
}

Outcome protocol_fidelity(const fs::path& work) {
  Checks ck;
  const fs::path dir = work / "crossval";
  fs::remove_all(dir);
  if (run_cli({"synth", "-n", "50", "--min-dots", "30", "--max-dots", "200", "--width", "192", "--height", "192",
               "--seed", "8001", "-o", (dir / "data").string()}) != 0)
    return {false, "synth failed"};
  const std::vector<std::string> settings{"--set", "cell_size=64", "--set", "codebook.K=50",
                                          "--set", "codebook.max_descriptors=5000"};
  const auto crossval = [&](const std::string& out) {
    std::vector<std::string> args{"crossval", "-m", (dir / "data" / "manifest.json").string(), "--k", "5",
                                  "--seed", "8",  "-o", (dir / out).string()};
    args.insert(args.end(), settings.begin(), settings.end());
    return run_cli(args);
  };
  if (crossval("run1") != 0 || crossval("run2") != 0) return {false, "crossval failed"};

  const auto folds = read_csv(dir / "run1" / "folds.csv");
  std::map<std::string, std::size_t> fold_of;
  std::map<std::size_t, std::size_t> fold_sizes;
  for (std::size_t i = 1; i < folds.size(); ++i) {
    const auto f = static_cast<std::size_t>(std::stoul(folds[i][1]));
    ck.expect(fold_of.emplace(folds[i][0], f).second, "image listed twice in folds.csv");
    ++fold_sizes[f];
  }
  ck.expect(fold_of.size() == 50, std::to_string(fold_of.size()) + " images in folds.csv");
  for (std::size_t f = 0; f < 5; ++f) ck.expect(fold_sizes[f] == 10, "fold size " + std::to_string(fold_sizes[f]));

  std::map<std::string, int> tested;
  std::multiset<std::string> fold_lines;
  double fold_ae = 0.0;
  for (std::size_t f = 0; f < 5; ++f) {
    const auto rows = read_csv(dir / "run1" / ("fold" + std::to_string(f) + "_images.csv"));
    for (std::size_t i = 1; i < rows.size(); ++i) {
      ++tested[rows[i][0]];
      ck.expect(fold_of[rows[i][0]] == f, rows[i][0] + " tested outside its fold");
      std::string joined;
      for (const auto& c : rows[i]) joined += c + ",";
      fold_lines.insert(joined);
      fold_ae += std::stod(rows[i][3]);
    }
  }
  ck.expect(tested.size() == 50, std::to_string(tested.size()) + " distinct images tested");
  for (const auto& [id, n] : tested) ck.expect(n == 1, id + " tested " + std::to_string(n) + " times");

  const auto pooled = read_csv(dir / "run1" / "pooled_images.csv");
  std::multiset<std::string> pooled_lines;
  for (std::size_t i = 1; i < pooled.size(); ++i) {
    std::string joined;
    for (const auto& c : pooled[i]) joined += c + ",";
    pooled_lines.insert(joined);
  }
  ck.expect(pooled_lines == fold_lines, "pooled rows differ from the union of fold rows");
  const std::string summary = read_file((dir / "run1" / "pooled_summary.txt").string());
  const double pooled_mae = std::stod(summary.substr(summary.find("mae=") + 4));
  ck.expect(std::abs(pooled_mae - fold_ae / 50.0) <= 1e-9 * std::max(1.0, pooled_mae), "pooled mu_AE mismatch");

  const auto a = snapshot(dir / "run1"), b = snapshot(dir / "run2");
  ck.expect(a == b, "second run differs");
  return ck.done("k = 5 on 50 images: folds of 10, each image tested once, pooled = union of folds (mu_AE " +
                 fmt(pooled_mae) + "); " + std::to_string(a.size()) + " report files byte-identical across runs");
}

// --- 9 ------------------------------------------------------------------------

GrayImage hconcat(const GrayImage& a, const GrayImage& b) {
  GrayImage out(a.width() + b.width(), a.height());
  for (std::size_t r = 0; r < a.height(); ++r) {
    for (std::size_t c = 0; c < a.width(); ++c) out.at(r, c) = a.at(r, c);
    for (std::size_t c = 0; c < b.width(); ++c) out.at(r, a.width() + c) = b.at(r, c);
  }
  return out;
}

Outcome conservation(const fs::path& work) {
  Checks ck;
  Rng rng(909);
  for (int trial = 0; trial < 100; ++trial) {
    DotAnnotation ann;
    ann.width = 16 + rng.index(500);
    ann.height = 16 + rng.index(500);
    const std::size_t n = rng.index(400);
    for (std::size_t i = 0; i < n; ++i) {
      // Every fourth dot sits exactly on a cell boundary.
      const double x = i % 4 == 0 ? static_cast<double>(32 * rng.index(ann.width / 32 + 1)) : rng.uniform(0, ann.width);
      const double y = rng.uniform(0, static_cast<double>(ann.height));
      ann.points.push_back({std::min(x, std::nextafter(static_cast<double>(ann.width), 0.0)), y});
    }
    const std::size_t cell = 32 + rng.index(200);
    const auto rects = grid_cells(ann.width, ann.height, GridSpec{cell});
    const auto counts = cell_ground_truth(ann, rects);
    ck.expect(std::accumulate(counts.begin(), counts.end(), std::size_t{0}) == ann.count(),
              "annotation " + std::to_string(trial) + " lost dots");
  }

  SynthParams sp;
  sp.count = 10;
  sp.min_dots = 15;
  sp.max_dots = 90;
  sp.width = 128;
  sp.height = 256;
  sp.seed = 9001;
  const auto samples = synth_dataset(sp);
  Config config;
  config.cell_size = 64;
  config.codebook.size = 24;
  config.codebook.max_descriptors = 3000;
  config.head.max_positives = 600;
  config.seed = 9;
  const TrainedModel model = train(samples, config);

  std::size_t pairs = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < samples.size(); i += 2) {
    const auto a = count_image(samples[i].image, model), b = count_image(samples[i + 1].image, model);
    const auto joint = count_image(hconcat(samples[i].image, samples[i + 1].image), model);
    const double dev = std::abs(joint.total - (a.total + b.total));
    worst = std::max(worst, dev);
    ck.expect(dev <= 1e-9 * std::max(1.0, joint.total), "concatenation total off by " + fmt(dev));
    ++pairs;
  }

  const std::string path = (work / "roundtrip_model.json").string();
  save_model(model, path);
  const TrainedModel back = load_model(path);
  std::size_t probes = 0;
  for (const auto& s : samples) {
    const auto x = count_image(s.image, model), y = count_image(s.image, back);
    for (std::size_t c = 0; c < x.cells.size(); ++c) {
      ++probes;
      ck.expect(std::bit_cast<std::uint64_t>(x.cells[c].estimate) == std::bit_cast<std::uint64_t>(y.cells[c].estimate),
                "reloaded model predicts differently");
    }
  }
  ck.expect(serialize_model(back) == serialize_model(model), "re-serialized model differs");
  return ck.done("100 annotations conserved; " + std::to_string(pairs) +
                 " concatenations additive (max dev " + fmt(worst) + "); " + std::to_string(probes) +
                 " cell predictions bitwise equal after save/load");
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "crowdcount_acceptance";
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"GLCM oracle equivalence", glcm_oracle_equivalence},
      {"Wavelet correctness", wavelet_correctness},
      {"Fourier FFT, lattice peaks, cutoff monotonicity", fourier_checks},
      {"Poisson crowd confidence", poisson_confidence},
      {"SVR line, duality gap, KKT", svr_checks},
      {"Error metrics", metrics_checks},
      {"End-to-end synthetic counting", [&] { return end_to_end(work); }},
      {"Cross-validation protocol fidelity", [&] { return protocol_fidelity(work); }},
      {"Conservation and invariants", [&] { return conservation(work); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %zu %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
