#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dml/data.hpp"
#include "dml/diagnostics.hpp"
#include "dml/losses.hpp"
#include "dml/retrieval.hpp"

namespace dml {

inline constexpr const char* kLibraryVersion = "0.1.0";

struct HeadConfig {
  std::size_t hidden_dim = 512;
  std::size_t out_dim = 128;
  double dropout = 0.15;
};

struct OptimizerConfig {
  double lr = 1e-4;
  double weight_decay = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Either a synthetic spec or a pair of feature-file manifests.
struct DataSourceConfig {
  std::optional<SyntheticSpec> synthetic;
  std::optional<std::string> train_manifest;
  std::optional<std::string> test_manifest;
};

struct ExperimentConfig {
  std::string loss = "triplet";
  LossConfig loss_config;
  HeadConfig head;
  OptimizerConfig optimizer;
  std::size_t epochs = 50;
  BatchPlan batch;
  DataSourceConfig data;
  std::uint64_t seed = 0;
  std::size_t snapshot_interval = 10;
  std::string out_dir = "out";
  std::vector<std::size_t> recall_ks = {1, 5, 10};

  void validate() const;
};

/// Parses a config from JSON text. Unknown keys are rejected at every level:
/// a silently ignored typo in a hyperparameter would corrupt comparisons.
ExperimentConfig parse_experiment_config(const std::string& json_text);
/// Canonical JSON echo with every field resolved; hashing this ties a
/// TrainLog to the exact configuration that produced it.
std::string experiment_config_to_json(const ExperimentConfig& cfg);

// Desk-scale presets. "fine" has many weakly separated classes, "coarse"
// few well-separated ones. paper_scale switches to batch 512 / 100 epochs.
enum class Preset { kDefault, kFine, kCoarse };
Preset preset_from_name(const std::string& name);
ExperimentConfig make_preset_config(const std::string& loss, Preset preset, std::uint64_t seed,
                                    const std::string& out_dir, bool paper_scale = false);

struct ExperimentSummary {
  std::string loss;
  VarianceReport final_variance;
  GreedinessSummary greediness;
  RecallReport recall;
  double wall_clock_seconds = 0.0;
  std::string config_json;
  std::string library_version = kLibraryVersion;
  TrainLog log;
  std::string out_dir;
};

/// Trains the head on the configured data, logging loss / active ratio /
/// gradient norm per epoch and geometry snapshots every snapshot_interval
/// epochs, then evaluates the test split in inference mode. Writes
/// train_log.csv, summary.json, an embedding dump (feature-file format) and
/// a checkpoint into out_dir. On error, flushes the partial log plus a
/// failure marker and rethrows.
ExperimentSummary run_experiment(const ExperimentConfig& cfg);

struct SuiteRow {
  std::string loss;
  bool ok = false;
  std::string error;
  ExperimentSummary summary;
};

struct SuiteResult {
  std::vector<SuiteRow> rows;
  bool all_ok() const;
};

/// Runs each experiment; individual failures are recorded in their row and
/// the suite continues.
SuiteResult run_suite(const std::vector<ExperimentConfig>& cfgs);

struct DiagnoseResult {
  VarianceReport variance;
  RecallReport recall;
};

/// Offline diagnostics over an embedding dump: rows are re-normalized on
/// load, then the variance report and Recall@k are computed. A single-class
/// file has no retrieval task; its recall is reported as 0 at every k.
DiagnoseResult diagnose(const std::string& embedding_file, const std::vector<std::size_t>& ks);

// Plain-text rendering used by the CLI.
std::string render_variance_report(const VarianceReport& report);
std::string render_recall_report(const RecallReport& report);
std::string render_suite_table(const SuiteResult& result);

void write_summary_json(const ExperimentSummary& summary, const std::string& path);

}  // namespace dml
