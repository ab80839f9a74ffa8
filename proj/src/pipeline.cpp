#include "crowdcount/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numeric>
#include <sstream>

#include "crowdcount/error.hpp"
#include "crowdcount/rng.hpp"

namespace crowdcount {

namespace {

void append(std::vector<double>& out, const MomentStats& s) {
  out.insert(out.end(), {s.entropy, s.mean, s.variance, s.skewness, s.kurtosis});
}

std::vector<double> histogram_values(const WordHistogram& h) {
  return {h.counts.begin(), h.counts.end()};
}

DetectParams detect_params(const Config& config) {
  return DetectParams{config.head.threshold, config.head.scales, config.head.nms_overlap};
}

double finite_or_zero(double v) { return std::isfinite(v) ? v : 0.0; }

// Samples sorted by id so training does not depend on manifest order.
std::vector<const Sample*> canonical_order(std::span<const Sample> samples) {
  std::vector<const Sample*> out;
  for (const auto& s : samples) out.push_back(&s);
  std::stable_sort(out.begin(), out.end(),
                   [](const Sample* a, const Sample* b) { return a->annotation.image_id < b->annotation.image_id; });
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i]->annotation.image_id == out[i - 1]->annotation.image_id)
      fail(ErrorCode::Validation, "train: duplicate image id '" + out[i]->annotation.image_id + "'");
  return out;
}

struct TrainingCell {
  GrayImage pixels;
  CellRawFeatures raw;
  double gt = 0.0;
};

bool inside(const GrayImage& img, double x, double y, std::size_t half) {
  return x >= static_cast<double>(half) && y >= static_cast<double>(half) &&
         x + static_cast<double>(half) <= static_cast<double>(img.width()) &&
         y + static_cast<double>(half) <= static_cast<double>(img.height());
}

CellRect window_at(double x, double y, std::size_t window) {
  const auto half = static_cast<double>(window) / 2.0;
  return CellRect{static_cast<std::size_t>(std::lround(y - half)), static_cast<std::size_t>(std::lround(x - half)),
                  window, window};
}

HeadFilter fit_head_filter(std::span<const Sample* const> samples, const Config& config) {
  const std::size_t window = config.head.window;
  const std::size_t half = window / 2;
  Rng rng(config.seed ^ 0x68656164ULL);

  std::vector<std::pair<std::size_t, DotPoint>> dots;
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (const auto& p : samples[i]->annotation.points)
      if (inside(samples[i]->image, std::round(p.x), std::round(p.y), half)) dots.emplace_back(i, p);
  if (dots.size() > config.head.max_positives) {
    rng.shuffle(dots.begin(), dots.end());
    dots.resize(config.head.max_positives);
  }
  std::vector<GrayImage> heads;
  for (const auto& [i, p] : dots) heads.push_back(crop(samples[i]->image, window_at(p.x, p.y, window)));

  // Background windows: centres farther than half a window from every dot.
  std::vector<GrayImage> background;
  const std::size_t wanted = 4 * std::max<std::size_t>(heads.size(), 10);
  const std::size_t attempts = 20 * wanted;
  const auto min_dist2 = static_cast<double>(half * half);
  for (std::size_t a = 0; a < attempts && background.size() < wanted; ++a) {
    const Sample& s = *samples[rng.index(samples.size())];
    if (s.image.width() < window || s.image.height() < window) continue;
    const auto x = static_cast<double>(half + rng.index(s.image.width() - window + 1));
    const auto y = static_cast<double>(half + rng.index(s.image.height() - window + 1));
    const bool clear = std::none_of(s.annotation.points.begin(), s.annotation.points.end(), [&](const DotPoint& p) {
      return (p.x - x) * (p.x - x) + (p.y - y) * (p.y - y) <= min_dist2;
    });
    if (clear) background.push_back(crop(s.image, window_at(x, y, window)));
  }

  HeadTrainParams params;
  params.window = window;
  params.seed = config.seed;
  try {
    return train_head_filter(heads, background, params);
  } catch (const Error& e) {
    fail(e.code(), std::string("train: head filter stage: ") + e.what());
  }
}

}  // namespace

const std::vector<std::string>& CellFeatureRow::names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n{"interest_count", "mu", "fourier_count"};
    const char* moments[] = {"entropy", "mean", "variance", "skewness", "kurtosis"};
    for (const char* m : moments) n.push_back(std::string("fourier_recon_") + m);
    for (const char* m : moments) n.push_back(std::string("fourier_residual_") + m);
    n.push_back("glcm_count");
    const char* angles[] = {"0", "45", "90", "135"};
    for (const char* a : angles)
      for (const char* f : {"dissimilarity", "homogeneity", "energy", "entropy"})
        n.push_back(std::string("glcm_") + f + "_" + a);
    for (const char* a : angles)
      for (const char* f : {"variance", "skewness", "kurtosis"}) n.push_back(std::string("glcm_matrix_") + f + "_" + a);
    n.push_back("wavelet_count");
    const char* bands[] = {"LL3", "LH3", "HL3", "HH3", "LH2", "HL2", "HH2", "LH1", "HL1", "HH1"};
    for (const char* b : bands) n.push_back(std::string("wavelet_energy_") + b);
    for (const char* b : bands)
      for (const char* f : {"variance", "skewness", "kurtosis"}) n.push_back(std::string("wavelet_") + b + "_" + f);
    for (const char* h : {"eta_head", "head_scale_mean", "head_scale_var", "head_conf_mean", "head_conf_var"})
      n.push_back(h);
    return n;
  }();
  return names;
}

bool TrainedModel::converged() const {
  return sources.interest.svr.converged && sources.glcm.svr.converged && sources.wavelet.svr.converged &&
         fusion.svr.converged;
}

CellRawFeatures extract_raw(const GrayImage& cell, const Config& config) {
  CellRawFeatures raw;
  raw.descriptors = extract_descriptors(cell);
  raw.fourier = fourier_analyze(cell, config.fourier);
  raw.glcm = glcm_features(quantize(cell, config.glcm_levels), config.glcm_levels);
  raw.wavelet = wavelet_features(cell);
  return raw;
}

CellFeatureRow assemble_row(const CellRawFeatures& raw, const GrayImage& cell, const SourceModels& sources,
                            const Config& config) {
  CellFeatureRow row;
  auto& v = row.values;
  v.reserve(CellFeatureRow::kSize);

  const WordHistogram hist = word_histogram(raw.descriptors, sources.codebook);
  v.push_back(interest_count(hist, sources.interest));
  v.push_back(crowd_confidence(hist, sources.rates));

  v.push_back(raw.fourier.maxima_count);
  append(v, raw.fourier.recon_stats);
  append(v, raw.fourier.residual_stats);

  v.push_back(glcm_count(raw.glcm, sources.glcm));
  for (double f : raw.glcm.features()) v.push_back(f);
  for (double f : raw.glcm.stats()) v.push_back(f);

  v.push_back(wavelet_count(raw.wavelet, sources.wavelet));
  v.insert(v.end(), raw.wavelet.energies.begin(), raw.wavelet.energies.end());
  v.insert(v.end(), raw.wavelet.subband_stats.begin(), raw.wavelet.subband_stats.end());

  const auto detections = detect_heads(cell, sources.head, detect_params(config));
  const HeadSourceOutput head = head_stats(detections);
  v.insert(v.end(), {head.eta_head, head.scale_mean, head.scale_var, head.conf_mean, head.conf_var});

  for (double& x : v) x = finite_or_zero(x);
  return row;
}

CellFeatureRow extract_cell_row(const GrayImage& cell, const SourceModels& sources, const Config& config) {
  return assemble_row(extract_raw(cell, config), cell, sources, config);
}

TrainedModel train(std::span<const Sample> samples, const Config& config) {
  config.validate();
  if (samples.size() < 2) fail(ErrorCode::InsufficientData, "train: need at least 2 annotated images");
  const auto ordered = canonical_order(samples);

  std::vector<TrainingCell> cells;
  for (const Sample* s : ordered) {
    auto rects = sample_cells(s->image.width(), s->image.height(), config.cell_size, config.effective_stride());
    // Ragged inference cells are trained on as well.
    for (const auto& g : grid_cells(s->image.width(), s->image.height(), GridSpec{config.cell_size}))
      if (std::find(rects.begin(), rects.end(), g) == rects.end()) rects.push_back(g);
    const auto gt = cell_ground_truth(s->annotation, rects);
    for (std::size_t i = 0; i < rects.size(); ++i) {
      TrainingCell c;
      c.pixels = crop(s->image, rects[i]);
      c.raw = extract_raw(c.pixels, config);
      c.gt = static_cast<double>(gt[i]);
      cells.push_back(std::move(c));
    }
  }
  if (cells.size() < 2) fail(ErrorCode::InsufficientData, "train: fewer than 2 training cells");
  std::vector<double> targets;
  for (const auto& c : cells) targets.push_back(c.gt);

  TrainedModel model;
  model.config = config;
  model.config_hash = config.hash();
  auto& src = model.sources;

  // Codebook on a seeded subsample of all descriptors.
  std::vector<Descriptor> pool;
  for (const auto& c : cells) pool.insert(pool.end(), c.raw.descriptors.begin(), c.raw.descriptors.end());
  if (pool.size() > config.codebook.max_descriptors) {
    Rng rng(config.seed);
    rng.shuffle(pool.begin(), pool.end());
    pool.resize(config.codebook.max_descriptors);
  }
  try {
    src.codebook = build_codebook(pool, config.codebook.size, config.seed, config.codebook.max_iter);
  } catch (const Error& e) {
    fail(e.code(), std::string("train: codebook stage: ") + e.what());
  }

  std::vector<WordHistogram> hists;
  const auto crowd = std::make_unique<bool[]>(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    hists.push_back(word_histogram(cells[i].raw.descriptors, src.codebook));
    crowd[i] = cells[i].gt > 0.0;
  }
  try {
    src.rates = estimate_rates(hists, std::span<const bool>(crowd.get(), cells.size()), config.codebook.rate_floor);
  } catch (const Error& e) {
    fail(e.code(), std::string("train: Poisson rate stage: ") + e.what());
  }

  Matrix x_interest, x_glcm, x_wavelet;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    x_interest.push_row(histogram_values(hists[i]));
    const auto g = cells[i].raw.glcm.features();
    x_glcm.push_row(g);
    x_wavelet.push_row(cells[i].raw.wavelet.energies);
  }
  src.interest = fit_regressor(x_interest, targets, config.svr, config.seed);
  src.glcm = fit_regressor(x_glcm, targets, config.svr, config.seed);
  src.wavelet = fit_regressor(x_wavelet, targets, config.svr, config.seed);

  src.head = fit_head_filter(ordered, config);

  Matrix rows;
  for (const auto& c : cells) rows.push_row(assemble_row(c.raw, c.pixels, src, config).values);
  model.fusion = fit_regressor(rows, targets, config.svr, config.seed);
  return model;
}

void check_consistent(const TrainedModel& model) {
  const auto bad = [](const std::string& what) { fail(ErrorCode::ModelIncompatible, "model: " + what); };
  if (model.format_version != kModelFormatVersion) bad("unsupported format version");
  if (model.config_hash != model.config.hash()) bad("config hash does not match the stored config");
  const auto& s = model.sources;
  const std::size_t k = model.config.codebook.size;
  if (s.codebook.size() != k || s.codebook.centroids.cols() != kDescriptorSize) bad("codebook shape");
  if (s.rates.lambda_plus.size() != k || s.rates.lambda_minus.size() != k) bad("Poisson rate length");
  if (s.interest.dim() != k) bad("interest regressor dimension");
  if (s.glcm.dim() != GlcmFeatures::kFeatureCount) bad("glcm regressor dimension");
  if (s.wavelet.dim() != kSubbandCount) bad("wavelet regressor dimension");
  if (s.head.window != model.config.head.window || s.head.weights.size() != s.head.feature_size())
    bad("head filter shape");
  if (model.fusion.dim() != CellFeatureRow::kSize) bad("fusion regressor dimension");
}

void check_compatible(const TrainedModel& model, const Config& requested) {
  if (model.config_hash != requested.hash())
    fail(ErrorCode::ModelIncompatible, "model was trained with config " + hex64(model.config_hash) +
                                           ", requested config hashes to " + hex64(requested.hash()));
}

CountResult count_image(const GrayImage& img, const TrainedModel& model) {
  check_consistent(model);
  CountResult result;
  for (const auto& rect : grid_cells(img.width(), img.height(), GridSpec{model.config.cell_size})) {
    const GrayImage cell = crop(img, rect);
    const auto row = extract_cell_row(cell, model.sources, model.config);
    const double est = std::max(0.0, model.fusion.predict(row.values, "fusion"));
    result.cells.push_back({rect, est});
    result.total += est;
  }
  return result;
}

// --- Evaluation ---------------------------------------------------------------

namespace {

void mean_std(std::span<const double> v, double& mean, double& sd) {
  mean = sd = 0.0;
  if (v.empty()) return;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  for (double x : v) sd += (x - mean) * (x - mean);
  sd = std::sqrt(sd / static_cast<double>(v.size()));
}

}  // namespace

ErrorSummary summarize(std::span<const double> gt, std::span<const double> est) {
  require(gt.size() == est.size(), "summarize: gt and est lengths differ");
  ErrorSummary s;
  s.n = gt.size();
  std::vector<double> ae, nae;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    ae.push_back(std::abs(gt[i] - est[i]));
    if (gt[i] == 0.0) ++s.nae_excluded;
    else nae.push_back(ae.back() / gt[i]);
  }
  s.nae_n = nae.size();
  mean_std(ae, s.mean_ae, s.std_ae);
  mean_std(nae, s.mean_nae, s.std_nae);
  return s;
}

EvalReport evaluate(std::span<const ImagePrediction> predictions) {
  if (predictions.empty()) fail(ErrorCode::InsufficientData, "evaluate: no predictions");
  EvalReport r;
  std::vector<double> gt, est, pgt, pest;
  for (const auto& p : predictions) {
    require(p.cell_gt.size() == p.cell_est.size(), "evaluate: per-cell lengths differ for '" + p.image_id + "'");
    ImageRow row{p.image_id, p.gt, p.est, std::abs(p.gt - p.est), std::nullopt};
    if (p.gt != 0.0) row.nae = row.ae / p.gt;
    r.images.push_back(row);
    gt.push_back(p.gt);
    est.push_back(p.est);

    PatchProfile prof{p.image_id, p.gt, p.cell_gt.size(), 0.0, 0.0, 0.0};
    std::vector<double> cell_ae;
    for (std::size_t c = 0; c < p.cell_gt.size(); ++c) {
      const double ae = std::abs(p.cell_gt[c] - p.cell_est[c]);
      r.patches.push_back({p.image_id, c, p.cell_gt[c], p.cell_est[c], ae});
      cell_ae.push_back(ae);
      pgt.push_back(p.cell_gt[c]);
      pest.push_back(p.cell_est[c]);
      prof.mean_patch_gt += p.cell_gt[c];
    }
    mean_std(cell_ae, prof.mean_patch_ae, prof.std_patch_ae);
    if (!p.cell_gt.empty()) prof.mean_patch_gt /= static_cast<double>(p.cell_gt.size());
    r.patch_profile.push_back(prof);
  }
  r.image_summary = summarize(gt, est);
  r.patch_summary = summarize(pgt, pest);
  std::stable_sort(r.patch_profile.begin(), r.patch_profile.end(),
                   [](const PatchProfile& a, const PatchProfile& b) { return a.image_gt < b.image_gt; });
  return r;
}

EvalReport evaluate(std::span<const double> gt, std::span<const double> est) {
  require(gt.size() == est.size(), "evaluate: gt and est lengths differ");
  std::vector<ImagePrediction> preds;
  for (std::size_t i = 0; i < gt.size(); ++i) preds.push_back({std::to_string(i), gt[i], est[i], {}, {}});
  return evaluate(preds);
}

std::vector<ImagePrediction> predict_samples(const TrainedModel& model, std::span<const Sample> samples) {
  std::vector<ImagePrediction> out;
  for (const auto& s : samples) {
    const CountResult r = count_image(s.image, model);
    ImagePrediction p;
    p.image_id = s.annotation.image_id;
    p.gt = static_cast<double>(s.annotation.count());
    p.est = r.total;
    std::vector<CellRect> rects;
    for (const auto& c : r.cells) {
      rects.push_back(c.rect);
      p.cell_est.push_back(c.estimate);
    }
    for (std::size_t n : cell_ground_truth(s.annotation, rects)) p.cell_gt.push_back(static_cast<double>(n));
    out.push_back(std::move(p));
  }
  return out;
}

CrossValResult cross_validate(std::span<const Sample> samples, std::size_t k, std::uint64_t seed,
                              const Config& config) {
  std::vector<std::string> ids;
  for (const auto& s : samples) ids.push_back(s.annotation.image_id);
  CrossValResult result;
  result.folds = make_folds(ids, k, seed);

  Config cfg = config;
  cfg.seed = seed;
  std::vector<ImagePrediction> pooled;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<Sample> train_set, test_set;
    for (std::size_t i = 0; i < samples.size(); ++i)
      (result.folds.fold_of[i] == f ? test_set : train_set).push_back(samples[i]);
    const TrainedModel model = train(train_set, cfg);
    result.converged = result.converged && model.converged();
    auto preds = predict_samples(model, test_set);
    result.fold_reports.push_back(evaluate(preds));
    pooled.insert(pooled.end(), preds.begin(), preds.end());
  }
  result.pooled = evaluate(pooled);
  return result;
}

// --- Report formatting ----------------------------------------------------------

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string images_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "image_id,gt,est,ae,nae\n";
  for (const auto& r : report.images)
    out << r.image_id << ',' << format_number(r.gt) << ',' << format_number(r.est) << ',' << format_number(r.ae) << ','
        << (r.nae ? format_number(*r.nae) : "") << '\n';
  return out.str();
}

std::string patches_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "image_id,cell,gt,est,ae\n";
  for (const auto& p : report.patches)
    out << p.image_id << ',' << p.cell << ',' << format_number(p.gt) << ',' << format_number(p.est) << ','
        << format_number(p.ae) << '\n';
  return out.str();
}

std::string patch_profile_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "image_id,image_gt,cells,mean_patch_ae,std_patch_ae,mean_patch_gt\n";
  for (const auto& p : report.patch_profile)
    out << p.image_id << ',' << format_number(p.image_gt) << ',' << p.cells << ',' << format_number(p.mean_patch_ae)
        << ',' << format_number(p.std_patch_ae) << ',' << format_number(p.mean_patch_gt) << '\n';
  return out.str();
}

std::string summary_text(const EvalReport& report) {
  std::ostringstream out;
  const auto line = [&](const char* level, const ErrorSummary& s) {
    out << level << " n=" << s.n << " mae=" << format_number(s.mean_ae) << " sd_ae=" << format_number(s.std_ae)
        << " mnae=" << format_number(s.mean_nae) << " sd_nae=" << format_number(s.std_nae) << " nae_n=" << s.nae_n
        << " nae_excluded=" << s.nae_excluded << '\n';
  };
  line("image", report.image_summary);
  line("patch", report.patch_summary);
  return out.str();
}

}  // namespace crowdcount
