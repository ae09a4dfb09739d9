// metricbench: train small projection heads over feature vectors with seven
// supervised embedding losses and report geometry (intra-/inter-class
// variance) and optimization (active ratio, gradient norm) diagnostics plus
// Recall@k retrieval quality.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dml/charts.hpp"
#include "dml/data.hpp"
#include "dml/error.hpp"
#include "dml/experiment.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitPartialSuite = 5;

std::string read_text_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw dml::DataError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

struct RunFlags {
  std::string config_path;
  std::string loss = "triplet";
  std::string preset = "default";
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  long epochs = -1;  // -1: keep the preset/config value
  bool paper_scale = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& flags, bool with_loss) {
  cmd->add_option("--config", flags.config_path, "Experiment config JSON (overrides presets)");
  if (with_loss) cmd->add_option("--loss", flags.loss, "Loss name");
  cmd->add_option("--preset", flags.preset, "Synthetic preset: fine, coarse or default");
  cmd->add_option("--seed", flags.seed, "Root RNG seed");
  cmd->add_option("--out-dir", flags.out_dir, "Output directory");
  cmd->add_option("--epochs", flags.epochs, "Training epochs");
  cmd->add_flag("--paper-scale", flags.paper_scale, "Batch 512 / 100 epochs");
}

dml::ExperimentConfig build_config(const RunFlags& flags, const std::string& loss,
                                   const std::string& out_dir) {
  dml::ExperimentConfig cfg;
  if (!flags.config_path.empty()) {
    cfg = dml::parse_experiment_config(read_text_file(flags.config_path));
    cfg.loss = loss;
    cfg.out_dir = out_dir;
  } else {
    cfg = dml::make_preset_config(loss, dml::preset_from_name(flags.preset), flags.seed, out_dir,
                                  flags.paper_scale);
  }
  if (flags.epochs >= 0) cfg.epochs = static_cast<std::size_t>(flags.epochs);
  return cfg;
}

void print_summary(const dml::ExperimentSummary& summary) {
  std::cout << "loss: " << summary.loss << "\n"
            << dml::render_variance_report(summary.final_variance)
            << dml::render_recall_report(summary.recall);
  std::cout << "mean active ratio: " << summary.greediness.mean_active_ratio << "\n"
            << "mean grad norm:    " << summary.greediness.mean_grad_norm << "\n";
  if (summary.greediness.epochs_to_50pct)
    std::cout << "epochs to 50% loss reduction: " << *summary.greediness.epochs_to_50pct << "\n";
  std::cout << "outputs in " << summary.out_dir << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"metricbench: embedding-loss diagnostics bench"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic feature file set");
  dml::SyntheticSpec gen_spec;
  std::string gen_preset = "default", gen_split = "train", gen_out;
  gen->add_option("--preset", gen_preset, "fine, coarse or default");
  gen->add_option("--classes", gen_spec.class_count, "Number of classes");
  gen->add_option("--samples-per-class", gen_spec.samples_per_class, "Samples per class");
  gen->add_option("--dim", gen_spec.dim, "Feature dimension");
  gen->add_option("--center-scale", gen_spec.center_scale, "Class center coordinate range");
  gen->add_option("--within-std", gen_spec.within_std, "Within-class noise std");
  gen->add_option("--seed", gen_spec.seed, "Seed");
  gen->add_option("--split", gen_split, "train or test (noise stream)");
  gen->add_option("--out", gen_out, "Manifest path to write (.json)")->required();

  // train
  auto* train = app.add_subcommand("train", "Run one training experiment");
  RunFlags train_flags;
  add_run_flags(train, train_flags, /*with_loss=*/true);

  // suite
  auto* suite = app.add_subcommand("suite", "Run a multi-loss comparison");
  RunFlags suite_flags;
  std::vector<std::string> suite_losses;
  add_run_flags(suite, suite_flags, /*with_loss=*/false);
  suite->add_option("--losses", suite_losses, "Losses to run (default: all seven)");

  // diagnose
  auto* diag = app.add_subcommand("diagnose", "Offline diagnostics over an embedding dump");
  std::string diag_file;
  std::vector<std::size_t> diag_ks = {1, 5, 10};
  diag->add_option("file", diag_file, "Embedding feature file (.json manifest or .csv)")
      ->required();
  diag->add_option("--ks", diag_ks, "Recall@k values");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Recall@k only");
  std::string eval_file;
  std::vector<std::size_t> eval_ks = {1, 5, 10};
  eval->add_option("file", eval_file, "Embedding feature file")->required();
  eval->add_option("--ks", eval_ks, "Recall@k values");

  // charts
  auto* charts = app.add_subcommand("charts", "Render SVG charts from a train log CSV");
  std::string charts_csv, charts_out = "charts";
  bool charts_symlog = false;
  charts->add_option("csv", charts_csv, "train_log.csv path")->required();
  charts->add_option("--out-dir", charts_out, "Directory for the SVG files");
  charts->add_flag("--symlog", charts_symlog, "Apply a symlog transform to y values");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (gen->parsed()) {
      if (gen->count("--preset") > 0) {
        // Preset fills whatever was not set explicitly.
        const auto preset = *dml::make_preset_config("triplet", dml::preset_from_name(gen_preset),
                                                     gen_spec.seed, ".")
                                 .data.synthetic;
        if (gen->count("--classes") == 0) gen_spec.class_count = preset.class_count;
        if (gen->count("--samples-per-class") == 0)
          gen_spec.samples_per_class = preset.samples_per_class;
        if (gen->count("--dim") == 0) gen_spec.dim = preset.dim;
        if (gen->count("--center-scale") == 0) gen_spec.center_scale = preset.center_scale;
        if (gen->count("--within-std") == 0) gen_spec.within_std = preset.within_std;
      }
      dml::Split split = dml::Split::kTrain;
      if (gen_split == "test")
        split = dml::Split::kTest;
      else if (gen_split != "train")
        throw dml::ConfigError("--split must be train or test");
      const auto ds = dml::generate_synthetic(gen_spec, split);
      if (const auto dir = fs::path(gen_out).parent_path(); !dir.empty())
        fs::create_directories(dir);
      dml::save_features(ds, gen_out);
      std::cout << "wrote " << gen_out << " (" << ds.size() << " x " << ds.dim() << ", "
                << ds.class_count << " classes)\n";
      return kExitOk;
    }

    if (train->parsed()) {
      const auto cfg = build_config(train_flags, train_flags.loss, train_flags.out_dir);
      const auto summary = dml::run_experiment(cfg);
      print_summary(summary);
      return kExitOk;
    }

    if (suite->parsed()) {
      if (suite_losses.empty()) suite_losses = dml::loss_names();
      std::vector<dml::ExperimentConfig> cfgs;
      for (const auto& loss : suite_losses)
        cfgs.push_back(build_config(suite_flags, loss,
                                    (fs::path(suite_flags.out_dir) / loss).string()));
      const auto result = dml::run_suite(cfgs);
      std::cout << dml::render_suite_table(result);

      nlohmann::json rows = nlohmann::json::array();
      for (const auto& row : result.rows) {
        nlohmann::json r{{"loss", row.loss}, {"ok", row.ok}};
        if (!row.ok) r["error"] = row.error;
        rows.push_back(std::move(r));
      }
      fs::create_directories(suite_flags.out_dir);
      std::ofstream((fs::path(suite_flags.out_dir) / "suite_summary.json"))
          << nlohmann::json{{"rows", rows}}.dump(2) << "\n";
      return result.all_ok() ? kExitOk : kExitPartialSuite;
    }

    if (diag->parsed()) {
      const auto result = dml::diagnose(diag_file, diag_ks);
      std::cout << dml::render_variance_report(result.variance)
                << dml::render_recall_report(result.recall);
      return kExitOk;
    }

    if (eval->parsed()) {
      const auto result = dml::diagnose(eval_file, eval_ks);
      std::cout << dml::render_recall_report(result.recall);
      return kExitOk;
    }

    if (charts->parsed()) {
      dml::render_charts(charts_csv, charts_out, charts_symlog);
      std::cout << "wrote loss.svg, active_ratio.svg, grad_norm.svg to " << charts_out << "\n";
      return kExitOk;
    }
  } catch (const dml::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const dml::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const dml::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
