#include "crowdcount/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "crowdcount/error.hpp"
#include "crowdcount/model_io.hpp"
#include "crowdcount/pipeline.hpp"
#include "crowdcount/synth.hpp"

namespace crowdcount::cli {

namespace {

namespace fs = std::filesystem;

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::Config:
    case ErrorCode::InvalidArgument:
      return kUsageError;
    case ErrorCode::Io:
      return kIoError;
    case ErrorCode::ModelIncompatible:
      return kModelIncompatible;
    default:
      return kDataError;
  }
}

struct ConfigFlags {
  std::string path;
  std::vector<std::string> overrides;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", path, "JSON config file");
    cmd->add_option("--set", overrides, "Override a config key, e.g. --set svr.C=20 (repeatable)");
  }
  bool given() const { return !path.empty() || !overrides.empty(); }
  Config resolve() const {
    Config c = path.empty() ? Config{} : Config::load(path);
    for (const auto& o : overrides) c.set(o);
    return c;
  }
};

std::string one_decimal(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

std::string join(const fs::path& dir, const std::string& name) { return (dir / name).string(); }

void write_report(const EvalReport& report, const fs::path& dir, const std::string& prefix) {
  write_file_atomic(join(dir, prefix + "images.csv"), images_csv(report));
  write_file_atomic(join(dir, prefix + "patches.csv"), patches_csv(report));
  write_file_atomic(join(dir, prefix + "patch_profile.csv"), patch_profile_csv(report));
  write_file_atomic(join(dir, prefix + "summary.txt"), summary_text(report));
}

std::string display_summary(const EvalReport& r) {
  std::ostringstream out;
  const auto& i = r.image_summary;
  const auto& p = r.patch_summary;
  out << "images " << i.n << ": AE " << one_decimal(i.mean_ae) << " +/- " << one_decimal(i.std_ae) << ", NAE "
      << format_number(i.mean_nae) << " +/- " << format_number(i.std_nae) << " (" << i.nae_excluded
      << " zero-count excluded)\n";
  out << "patches " << p.n << ": AE " << one_decimal(p.mean_ae) << " +/- " << one_decimal(p.std_ae) << '\n';
  return out.str();
}

std::vector<std::string> feature_csv_header() {
  std::vector<std::string> h{"image_id", "cell", "row", "col", "height", "width", "gt"};
  for (const auto& n : CellFeatureRow::names()) h.push_back(n);
  return h;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Crowd counting by fusing interest-point, Fourier, GLCM, wavelet and head-detection sources",
               "crowdcount"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate synthetic blob-crowd images with dot annotations");
  SynthParams sp;
  std::optional<std::uint64_t> synth_seed;
  std::string synth_out;
  synth->add_option("--count,-n", sp.count, "Number of images")->check(CLI::PositiveNumber);
  synth->add_option("--min-dots", sp.min_dots, "Minimum heads per image");
  synth->add_option("--max-dots", sp.max_dots, "Maximum heads per image");
  synth->add_option("--width", sp.width, "Image width");
  synth->add_option("--height", sp.height, "Image height");
  synth->add_option("--seed", synth_seed, "Random seed")->required();
  synth->add_option("--out,-o", synth_out, "Output directory")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a model on an annotated manifest");
  ConfigFlags train_cfg;
  std::string train_manifest, train_out;
  std::optional<std::uint64_t> train_seed;
  train_cmd->add_option("--manifest,-m", train_manifest, "Dataset manifest")->required();
  train_cmd->add_option("--out,-o", train_out, "Model output path")->required();
  train_cmd->add_option("--seed", train_seed, "Random seed")->required();
  train_cfg.attach(train_cmd);

  // count
  auto* count_cmd = app.add_subcommand("count", "Estimate the number of people in images");
  ConfigFlags count_cfg;
  std::string count_model, count_cells;
  std::vector<std::string> count_images;
  count_cmd->add_option("--model", count_model, "Trained model")->required();
  count_cmd->add_option("images", count_images, "Image files (PGM/PPM)")->required();
  count_cmd->add_option("--cells-csv", count_cells, "Also write per-cell estimates to this CSV");
  count_cfg.attach(count_cmd);

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a model against annotated images");
  ConfigFlags eval_cfg;
  std::string eval_model, eval_manifest, eval_out;
  eval_cmd->add_option("--model", eval_model, "Trained model")->required();
  eval_cmd->add_option("--manifest,-m", eval_manifest, "Dataset manifest")->required();
  eval_cmd->add_option("--out-dir,-o", eval_out, "Directory for report files")->required();
  eval_cfg.attach(eval_cmd);

  // crossval
  auto* cv_cmd = app.add_subcommand("crossval", "k-fold cross-validation");
  ConfigFlags cv_cfg;
  std::string cv_manifest, cv_out;
  std::size_t cv_k = 5;
  std::optional<std::uint64_t> cv_seed;
  cv_cmd->add_option("--manifest,-m", cv_manifest, "Dataset manifest")->required();
  cv_cmd->add_option("--k", cv_k, "Number of folds")->check(CLI::Range(2, 1000000));
  cv_cmd->add_option("--seed", cv_seed, "Random seed")->required();
  cv_cmd->add_option("--out-dir,-o", cv_out, "Directory for report files")->required();
  cv_cfg.attach(cv_cmd);

  // features
  auto* feat_cmd = app.add_subcommand("features", "Dump per-cell fusion feature rows as CSV");
  std::string feat_model, feat_manifest, feat_out;
  std::vector<std::string> feat_images;
  feat_cmd->add_option("--model", feat_model, "Trained model")->required();
  auto* feat_m = feat_cmd->add_option("--manifest,-m", feat_manifest, "Dataset manifest (adds ground truth)");
  auto* feat_i = feat_cmd->add_option("images", feat_images, "Image files");
  feat_m->excludes(feat_i);
  feat_cmd->add_option("--out,-o", feat_out, "CSV output path (default stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsageError;
  }

  try {
    if (*synth) {
      sp.seed = *synth_seed;
      const auto samples = synth_dataset(sp);
      const auto manifest = write_dataset(samples, synth_out);
      out << "wrote " << samples.size() << " images; manifest " << manifest << '\n';
      return kOk;
    }

    if (*train_cmd) {
      Config config = train_cfg.resolve();
      config.seed = *train_seed;
      const auto samples = load_samples(load_manifest(train_manifest));
      const TrainedModel model = train(samples, config);
      save_model(model, train_out);
      out << "model " << train_out << " digest " << hex64(model_digest(model)) << " config " << hex64(model.config_hash)
          << '\n';
      if (!model.converged()) {
        err << "warning: an SVR stopped at its iteration limit before reaching tolerance\n";
        return kConvergenceWarning;
      }
      return kOk;
    }

    if (*count_cmd) {
      const TrainedModel model = load_model(count_model);
      if (count_cfg.given()) check_compatible(model, count_cfg.resolve());
      std::ostringstream cells;
      cells << "image,cell,row,col,height,width,estimate\n";
      for (const auto& path : count_images) {
        const CountResult r = count_image(read_image(path), model);
        out << path << '\t' << one_decimal(r.total) << '\n';
        for (std::size_t i = 0; i < r.cells.size(); ++i) {
          const auto& c = r.cells[i];
          cells << path << ',' << i << ',' << c.rect.row << ',' << c.rect.col << ',' << c.rect.height << ','
                << c.rect.width << ',' << format_number(c.estimate) << '\n';
        }
      }
      if (!count_cells.empty()) write_file_atomic(count_cells, cells.str());
      return kOk;
    }

    if (*eval_cmd) {
      const TrainedModel model = load_model(eval_model);
      if (eval_cfg.given()) check_compatible(model, eval_cfg.resolve());
      const auto samples = load_samples(load_manifest(eval_manifest));
      const EvalReport report = evaluate(predict_samples(model, samples));
      write_report(report, eval_out, "");
      out << display_summary(report);
      return kOk;
    }

    if (*cv_cmd) {
      const Config config = cv_cfg.resolve();
      const auto samples = load_samples(load_manifest(cv_manifest));
      const CrossValResult r = cross_validate(samples, cv_k, *cv_seed, config);
      const fs::path dir(cv_out);
      std::ostringstream folds;
      folds << "image_id,fold\n";
      for (std::size_t i = 0; i < r.folds.ids.size(); ++i) folds << r.folds.ids[i] << ',' << r.folds.fold_of[i] << '\n';
      write_file_atomic(join(dir, "folds.csv"), folds.str());
      for (std::size_t f = 0; f < r.fold_reports.size(); ++f)
        write_report(r.fold_reports[f], dir, "fold" + std::to_string(f) + "_");
      write_report(r.pooled, dir, "pooled_");
      for (std::size_t f = 0; f < r.fold_reports.size(); ++f)
        out << "fold " << f << ": " << display_summary(r.fold_reports[f]);
      out << "pooled: " << display_summary(r.pooled);
      if (!r.converged) {
        err << "warning: an SVR stopped at its iteration limit before reaching tolerance\n";
        return kConvergenceWarning;
      }
      return kOk;
    }

    if (*feat_cmd) {
      const TrainedModel model = load_model(feat_model);
      std::vector<Sample> samples;
      if (!feat_manifest.empty()) {
        samples = load_samples(load_manifest(feat_manifest));
      } else {
        for (const auto& path : feat_images) {
          Sample s;
          s.image = read_image(path);
          s.annotation.image_id = path;
          samples.push_back(std::move(s));
        }
      }
      std::ostringstream csv;
      const auto header = feature_csv_header();
      for (std::size_t i = 0; i < header.size(); ++i) csv << (i ? "," : "") << header[i];
      csv << '\n';
      for (const auto& s : samples) {
        const auto rects = grid_cells(s.image.width(), s.image.height(), GridSpec{model.config.cell_size});
        const auto gt = cell_ground_truth(s.annotation, rects);
        for (std::size_t i = 0; i < rects.size(); ++i) {
          const auto row = extract_cell_row(crop(s.image, rects[i]), model.sources, model.config);
          csv << s.annotation.image_id << ',' << i << ',' << rects[i].row << ',' << rects[i].col << ','
              << rects[i].height << ',' << rects[i].width << ',';
          if (!feat_manifest.empty()) csv << gt[i];
          for (double v : row.values) csv << ',' << format_number(v);
          csv << '\n';
        }
      }
      if (feat_out.empty()) out << csv.str();
      else write_file_atomic(feat_out, csv.str());
      return kOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsageError;
}

}  // namespace crowdcount::cli
