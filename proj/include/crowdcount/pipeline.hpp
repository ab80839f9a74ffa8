#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crowdcount/config.hpp"
#include "crowdcount/dataset.hpp"
#include "crowdcount/fourier.hpp"
#include "crowdcount/glcm.hpp"
#include "crowdcount/head.hpp"
#include "crowdcount/interest.hpp"
#include "crowdcount/learn/regressor.hpp"
#include "crowdcount/wavelet.hpp"

namespace crowdcount {

inline constexpr int kModelFormatVersion = 1;

/// Fixed-order concatenation of every source's estimate and statistics for one cell:
///   interest_count, mu, fourier_count, 5 reconstruction + 5 residual moments,
///   glcm_count, 16 GLCM features, 12 GLCM matrix stats,
///   wavelet_count, 10 energies, 30 subband stats,
///   eta_head, scale mean/var, confidence mean/var.
struct CellFeatureRow {
  static constexpr int kLayoutVersion = 1;
  static constexpr std::size_t kSize = 88;

  std::vector<double> values;

  static const std::vector<std::string>& names();
};

/// Source outputs that do not depend on trained state.
struct CellRawFeatures {
  std::vector<Descriptor> descriptors;
  FourierOutput fourier;
  GlcmFeatures glcm;
  WaveletFeatures wavelet;
};

struct SourceModels {
  Codebook codebook;
  PoissonRates rates;
  Regressor interest;
  Regressor glcm;
  Regressor wavelet;
  HeadFilter head;
};

struct TrainedModel {
  int format_version = kModelFormatVersion;
  Config config;
  std::uint64_t config_hash = 0;
  SourceModels sources;
  Regressor fusion;

  /// True when every SVR reached its KKT tolerance.
  bool converged() const;
};

CellRawFeatures extract_raw(const GrayImage& cell, const Config& config);

CellFeatureRow assemble_row(const CellRawFeatures& raw, const GrayImage& cell, const SourceModels& sources,
                            const Config& config);

/// Runs all five sources on one cell.
CellFeatureRow extract_cell_row(const GrayImage& cell, const SourceModels& sources, const Config& config);

/// Staged training: descriptors -> codebook -> Poisson rates -> per-source SVRs on
/// densely sampled cells -> head filter -> fusion SVR. Deterministic for config.seed.
TrainedModel train(std::span<const Sample> samples, const Config& config);

/// Throws ErrorCode::ModelIncompatible when `requested` does not hash like the model's
/// config, or the model file is internally inconsistent.
void check_compatible(const TrainedModel& model, const Config& requested);
void check_consistent(const TrainedModel& model);

struct CellEstimate {
  CellRect rect;
  double estimate = 0.0;
};

struct CountResult {
  double total = 0.0;
  std::vector<CellEstimate> cells;
};

/// Disjoint grid, fused per-cell estimate clamped at zero, total = sum of cells.
CountResult count_image(const GrayImage& img, const TrainedModel& model);

// --- Evaluation ---------------------------------------------------------------

struct ImagePrediction {
  std::string image_id;
  double gt = 0.0;
  double est = 0.0;
  std::vector<double> cell_gt;
  std::vector<double> cell_est;
};

struct ImageRow {
  std::string image_id;
  double gt = 0.0;
  double est = 0.0;
  double ae = 0.0;
  std::optional<double> nae;  // absent when gt == 0
};

struct PatchRow {
  std::string image_id;
  std::size_t cell = 0;
  double gt = 0.0;
  double est = 0.0;
  double ae = 0.0;
};

struct ErrorSummary {
  std::size_t n = 0;
  double mean_ae = 0.0;
  double std_ae = 0.0;
  std::size_t nae_n = 0;
  std::size_t nae_excluded = 0;  // rows with zero ground truth
  double mean_nae = 0.0;
  double std_nae = 0.0;
};

/// Per-image patch error profile: mean/std of per-patch AE and mean ground truth per patch.
struct PatchProfile {
  std::string image_id;
  double image_gt = 0.0;
  std::size_t cells = 0;
  double mean_patch_ae = 0.0;
  double std_patch_ae = 0.0;
  double mean_patch_gt = 0.0;
};

struct EvalReport {
  std::vector<ImageRow> images;
  std::vector<PatchRow> patches;
  ErrorSummary image_summary;
  ErrorSummary patch_summary;
  /// One entry per image, sorted by ascending ground-truth count.
  std::vector<PatchProfile> patch_profile;
};

/// Mean and population standard deviation of AE and NAE at image and patch level.
EvalReport evaluate(std::span<const ImagePrediction> predictions);
EvalReport evaluate(std::span<const double> gt, std::span<const double> est);

ErrorSummary summarize(std::span<const double> gt, std::span<const double> est);

std::vector<ImagePrediction> predict_samples(const TrainedModel& model, std::span<const Sample> samples);

struct CrossValResult {
  FoldSplit folds;
  std::vector<EvalReport> fold_reports;
  EvalReport pooled;
  bool converged = true;
};

/// Train on k-1 folds, test on the held-out fold, pool every held-out prediction.
CrossValResult cross_validate(std::span<const Sample> samples, std::size_t k, std::uint64_t seed,
                              const Config& config);

// --- Report formatting ----------------------------------------------------------

/// Columns image_id,gt,est,ae,nae; numbers printed with 17 significant digits.
std::string images_csv(const EvalReport& report);
std::string patches_csv(const EvalReport& report);
std::string patch_profile_csv(const EvalReport& report);
std::string summary_text(const EvalReport& report);
std::string format_number(double v);

}  // namespace crowdcount
