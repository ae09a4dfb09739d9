#include "dml/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include <json.hpp>

#include "dml/log.hpp"
#include "dml/model.hpp"
#include "dml/rng.hpp"
#include "io_util.hpp"

namespace dml {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& ctx) {
  if (!j.is_object()) throw ConfigError("config: " + ctx + " must be a JSON object");
  for (const auto& item : j.items())
    if (!allowed.count(item.key()))
      throw ConfigError("config: unknown key '" + item.key() + "' in " + ctx);
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

// Largest valid (P, K) split of a batch over C classes, preferring the
// conventional K = 4.
std::pair<std::size_t, std::size_t> pk_split(std::size_t batch, std::size_t num_classes) {
  if (batch % 4 == 0 && batch / 4 <= num_classes) return {batch / 4, 4};
  for (std::size_t p = std::min(num_classes, batch / 2); p >= 1; --p)
    if (batch % p == 0 && batch / p >= 2) return {p, batch / p};
  throw ConfigError("no valid P*K split of batch " + std::to_string(batch) + " over " +
                    std::to_string(num_classes) + " classes");
}

std::vector<std::span<double>> bank_param_spans(CenterBank& bank) {
  std::vector<std::span<double>> spans;
  for (auto& [cls, center] : bank.centers) spans.emplace_back(center);
  return spans;
}

GradSnapshot bank_grad_snapshot(const CenterBank& bank, const std::map<int, Vector>& grad_params) {
  GradSnapshot snap;
  for (const auto& [cls, center] : bank.centers) {
    auto it = grad_params.find(cls);
    if (it == grad_params.end())
      throw ContractError("missing center gradient for class " + std::to_string(cls));
    snap.groups.push_back({"center_" + std::to_string(cls), it->second});
  }
  snap.global_norm = global_grad_norm(snap);
  return snap;
}

json variance_to_json(const VarianceReport& r) {
  json per_class = json::object();
  for (const auto& [cls, stats] : r.per_class_intra)
    per_class[std::to_string(cls)] = {
        {"mean", stats.mean}, {"var", stats.var}, {"count", stats.count}};
  return json{{"sigma2_intra_eq1", r.sigma2_intra_eq1},
              {"sigma2_inter_eq1", r.sigma2_inter_eq1 ? json(*r.sigma2_inter_eq1) : json(nullptr)},
              {"intra_mean", r.intra_mean},
              {"intra_var", r.intra_var},
              {"inter_mean", r.inter_mean ? json(*r.inter_mean) : json(nullptr)},
              {"inter_var", r.inter_var ? json(*r.inter_var) : json(nullptr)},
              {"per_class_intra", per_class}};
}

json recall_to_json(const RecallReport& r) {
  json at_k = json::object();
  for (const auto& [k, v] : r.recall_at_k) at_k[std::to_string(k)] = v;
  return json{{"query_count", r.query_count},
              {"singleton_queries", r.singleton_query_count},
              {"recall_at_k", at_k}};
}

json greediness_to_json(const GreedinessSummary& g) {
  return json{{"mean_active_ratio", g.mean_active_ratio},
              {"mean_grad_norm", g.mean_grad_norm},
              {"epochs_to_50pct", g.epochs_to_50pct ? json(*g.epochs_to_50pct) : json(nullptr)},
              {"epochs_to_60pct", g.epochs_to_60pct ? json(*g.epochs_to_60pct) : json(nullptr)}};
}

}  // namespace

void ExperimentConfig::validate() const {
  loss_kind_from_name(loss);
  loss_config.validate();
  if (head.hidden_dim == 0 || head.out_dim == 0)
    throw ConfigError("config: head dims must be positive");
  if (head.dropout < 0.0 || head.dropout >= 1.0)
    throw ConfigError("config: dropout must lie in [0, 1)");
  if (optimizer.lr < 0.0 || optimizer.weight_decay < 0.0)
    throw ConfigError("config: lr and weight_decay must be >= 0");
  if (optimizer.beta1 < 0.0 || optimizer.beta1 >= 1.0 || optimizer.beta2 < 0.0 ||
      optimizer.beta2 >= 1.0)
    throw ConfigError("config: Adam betas must lie in [0, 1)");
  if (!(optimizer.eps > 0.0)) throw ConfigError("config: Adam eps must be > 0");
  if (snapshot_interval == 0) throw ConfigError("config: snapshot_interval must be >= 1");
  batch.validate();
  if (out_dir.empty()) throw ConfigError("config: out_dir must not be empty");
  if (recall_ks.empty()) throw ConfigError("config: recall_ks must not be empty");
  for (std::size_t k : recall_ks)
    if (k == 0) throw ConfigError("config: recall k values must be positive");

  const bool has_synthetic = data.synthetic.has_value();
  const bool has_files = data.train_manifest.has_value() || data.test_manifest.has_value();
  if (has_synthetic == has_files)
    throw ConfigError("config: data must be either synthetic or a train/test manifest pair");
  if (has_synthetic) {
    data.synthetic->validate();
  } else {
    if (!data.train_manifest || !data.test_manifest)
      throw ConfigError("config: file data needs both train_manifest and test_manifest");
    for (const auto& p : {*data.train_manifest, *data.test_manifest})
      if (!fs::exists(p)) throw ConfigError("config: referenced path does not exist: " + p);
  }
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }

  ExperimentConfig cfg;
  try {
    check_keys(j,
               {"loss", "loss_config", "head", "optimizer", "epochs", "batch", "data", "seed",
                "snapshot_interval", "out_dir", "recall_ks"},
               "top level");
    read_if(j, "loss", cfg.loss);
    read_if(j, "epochs", cfg.epochs);
    read_if(j, "seed", cfg.seed);
    read_if(j, "snapshot_interval", cfg.snapshot_interval);
    read_if(j, "out_dir", cfg.out_dir);
    read_if(j, "recall_ks", cfg.recall_ks);

    if (j.contains("loss_config")) {
      const auto& lc = j.at("loss_config");
      check_keys(lc,
                 {"margin", "temperature", "center_weight", "arcface_margin", "arcface_scale",
                  "active_eps"},
                 "loss_config");
      read_if(lc, "margin", cfg.loss_config.margin);
      read_if(lc, "temperature", cfg.loss_config.temperature);
      read_if(lc, "center_weight", cfg.loss_config.center_weight);
      read_if(lc, "arcface_margin", cfg.loss_config.arcface_margin);
      read_if(lc, "arcface_scale", cfg.loss_config.arcface_scale);
      read_if(lc, "active_eps", cfg.loss_config.active_eps);
    }
    if (j.contains("head")) {
      const auto& h = j.at("head");
      check_keys(h, {"hidden_dim", "out_dim", "dropout"}, "head");
      read_if(h, "hidden_dim", cfg.head.hidden_dim);
      read_if(h, "out_dim", cfg.head.out_dim);
      read_if(h, "dropout", cfg.head.dropout);
    }
    if (j.contains("optimizer")) {
      const auto& o = j.at("optimizer");
      check_keys(o, {"lr", "weight_decay", "beta1", "beta2", "eps"}, "optimizer");
      read_if(o, "lr", cfg.optimizer.lr);
      read_if(o, "weight_decay", cfg.optimizer.weight_decay);
      read_if(o, "beta1", cfg.optimizer.beta1);
      read_if(o, "beta2", cfg.optimizer.beta2);
      read_if(o, "eps", cfg.optimizer.eps);
    }
    cfg.batch.seed = cfg.seed;
    if (j.contains("batch")) {
      const auto& b = j.at("batch");
      check_keys(b, {"strategy", "classes_per_batch", "samples_per_class", "batch_size", "seed"},
                 "batch");
      if (b.contains("strategy"))
        cfg.batch.strategy = batch_strategy_from_name(b.at("strategy").get<std::string>());
      read_if(b, "classes_per_batch", cfg.batch.classes_per_batch);
      read_if(b, "samples_per_class", cfg.batch.samples_per_class);
      read_if(b, "batch_size", cfg.batch.batch_size);
      read_if(b, "seed", cfg.batch.seed);
    }
    if (j.contains("data")) {
      const auto& d = j.at("data");
      check_keys(d, {"synthetic", "train_manifest", "test_manifest"}, "data");
      if (d.contains("synthetic")) {
        const auto& s = d.at("synthetic");
        check_keys(s, {"classes", "samples_per_class", "dim", "center_scale", "within_std", "seed"},
                   "data.synthetic");
        SyntheticSpec spec;
        spec.seed = cfg.seed;
        read_if(s, "classes", spec.class_count);
        read_if(s, "samples_per_class", spec.samples_per_class);
        read_if(s, "dim", spec.dim);
        read_if(s, "center_scale", spec.center_scale);
        read_if(s, "within_std", spec.within_std);
        read_if(s, "seed", spec.seed);
        cfg.data.synthetic = spec;
      }
      if (d.contains("train_manifest")) cfg.data.train_manifest = d.at("train_manifest").get<std::string>();
      if (d.contains("test_manifest")) cfg.data.test_manifest = d.at("test_manifest").get<std::string>();
    } else {
      cfg.data.synthetic = SyntheticSpec{};
      cfg.data.synthetic->seed = cfg.seed;
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
  json data;
  if (cfg.data.synthetic) {
    const auto& s = *cfg.data.synthetic;
    data["synthetic"] = {{"classes", s.class_count},
                         {"samples_per_class", s.samples_per_class},
                         {"dim", s.dim},
                         {"center_scale", s.center_scale},
                         {"within_std", s.within_std},
                         {"seed", s.seed}};
  } else {
    data["train_manifest"] = cfg.data.train_manifest.value_or("");
    data["test_manifest"] = cfg.data.test_manifest.value_or("");
  }
  const json j{
      {"loss", cfg.loss},
      {"loss_config",
       {{"margin", cfg.loss_config.margin},
        {"temperature", cfg.loss_config.temperature},
        {"center_weight", cfg.loss_config.center_weight},
        {"arcface_margin", cfg.loss_config.arcface_margin},
        {"arcface_scale", cfg.loss_config.arcface_scale},
        {"active_eps", cfg.loss_config.active_eps}}},
      {"head",
       {{"hidden_dim", cfg.head.hidden_dim},
        {"out_dim", cfg.head.out_dim},
        {"dropout", cfg.head.dropout}}},
      {"optimizer",
       {{"lr", cfg.optimizer.lr},
        {"weight_decay", cfg.optimizer.weight_decay},
        {"beta1", cfg.optimizer.beta1},
        {"beta2", cfg.optimizer.beta2},
        {"eps", cfg.optimizer.eps}}},
      {"epochs", cfg.epochs},
      {"batch",
       {{"strategy", batch_strategy_name(cfg.batch.strategy)},
        {"classes_per_batch", cfg.batch.classes_per_batch},
        {"samples_per_class", cfg.batch.samples_per_class},
        {"batch_size", cfg.batch.batch_size},
        {"seed", cfg.batch.seed}}},
      {"data", data},
      {"seed", cfg.seed},
      {"snapshot_interval", cfg.snapshot_interval},
      {"out_dir", cfg.out_dir},
      {"recall_ks", cfg.recall_ks}};
  return j.dump(2);
}

Preset preset_from_name(const std::string& name) {
  if (name == "fine") return Preset::kFine;
  if (name == "coarse") return Preset::kCoarse;
  if (name == "default" || name.empty()) return Preset::kDefault;
  throw ConfigError("unknown preset '" + name + "' (expected fine, coarse or default)");
}

ExperimentConfig make_preset_config(const std::string& loss, Preset preset, std::uint64_t seed,
                                    const std::string& out_dir, bool paper_scale) {
  ExperimentConfig cfg;
  cfg.loss = loss;
  cfg.seed = seed;
  cfg.out_dir = out_dir;
  cfg.epochs = paper_scale ? 100 : 50;

  SyntheticSpec spec;
  spec.seed = seed;
  spec.dim = 64;
  switch (preset) {
    case Preset::kDefault:
      spec.class_count = 20;
      spec.samples_per_class = 50;
      spec.center_scale = 1.0;
      spec.within_std = 0.35;
      break;
    case Preset::kFine:
      // Many classes, low separation-to-spread ratio.
      spec.class_count = 50;
      spec.samples_per_class = 20;
      spec.center_scale = 0.5;
      spec.within_std = 0.35;
      break;
    case Preset::kCoarse:
      spec.class_count = 10;
      spec.samples_per_class = 50;
      spec.center_scale = 2.0;
      spec.within_std = 0.25;
      break;
  }
  cfg.data.synthetic = spec;

  const std::size_t batch = paper_scale ? 512 : 64;
  cfg.batch.seed = seed;
  if (loss_kind_from_name(loss) == LossKind::kNpair) {
    cfg.batch.strategy = BatchStrategy::kNpairPairs;
    cfg.batch.batch_size = std::min(batch, 2 * spec.class_count);
  } else {
    cfg.batch.strategy = BatchStrategy::kPkBalanced;
    const auto [p, k] = pk_split(batch, spec.class_count);
    cfg.batch.classes_per_batch = p;
    cfg.batch.samples_per_class = k;
    cfg.batch.batch_size = batch;
  }
  return cfg;
}

ExperimentSummary run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();
  fs::create_directories(cfg.out_dir);
  const fs::path out_dir(cfg.out_dir);
  std::error_code ec;
  fs::remove(out_dir / "FAILED.json", ec);  // stale marker from an earlier run

  const std::string config_json = experiment_config_to_json(cfg);
  const LossKind kind = loss_kind_from_name(cfg.loss);

  TrainLog log;
  log.loss = cfg.loss;
  log.seed = cfg.seed;
  log.config_hash = fnv1a64(config_json);

  try {
    FeatureDataset train, test;
    if (cfg.data.synthetic) {
      train = generate_synthetic(*cfg.data.synthetic, Split::kTrain);
      test = generate_synthetic(*cfg.data.synthetic, Split::kTest);
    } else {
      train = load_features(*cfg.data.train_manifest);
      train.split = Split::kTrain;
      test = load_features(*cfg.data.test_manifest);
      test.split = Split::kTest;
    }
    if (train.class_count < 2) throw DataError("training set needs at least 2 classes");
    if (train.dim() != test.dim())
      throw DataError("train dim " + std::to_string(train.dim()) + " != test dim " +
                      std::to_string(test.dim()));
    for (std::size_t k : cfg.recall_ks)
      if (k >= test.size())
        throw ConfigError("recall k = " + std::to_string(k) + " too large for test set of " +
                          std::to_string(test.size()));

    ProjectionHead head = ProjectionHead::init(train.dim(), cfg.head.hidden_dim, cfg.head.out_dim,
                                               cfg.head.dropout, cfg.seed);
    AdamState adam = AdamState::init_like(head.param_groups());
    adam.lr = cfg.optimizer.lr;
    adam.weight_decay = cfg.optimizer.weight_decay;
    adam.beta1 = cfg.optimizer.beta1;
    adam.beta2 = cfg.optimizer.beta2;
    adam.eps = cfg.optimizer.eps;

    const bool use_bank = loss_uses_bank(kind);
    CenterBank bank;
    AdamState bank_adam;
    if (use_bank) {
      bank = CenterBank::random_init(train.as_labeled_set().class_ids(), cfg.head.out_dim,
                                     cfg.seed);
      bank_adam = AdamState::init_like(bank_param_spans(bank));
      bank_adam.lr = cfg.optimizer.lr;
      bank_adam.weight_decay = 0.0;  // centers are re-normalized; decay is pointless
      bank_adam.beta1 = cfg.optimizer.beta1;
      bank_adam.beta2 = cfg.optimizer.beta2;
      bank_adam.eps = cfg.optimizer.eps;
    }

    const LabeledSet test_features = test.as_labeled_set();
    auto take_snapshot = [&](std::size_t completed_epochs) {
      auto [emb, cache] = forward(head, test_features, Mode::kInference, 0);
      log.snapshots.emplace_back(completed_epochs, cosine_distance_stats(emb));
    };
    take_snapshot(0);

    BatchPlan plan = cfg.batch;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      BatchSampler sampler(train, plan, epoch);
      double epoch_loss = 0.0, epoch_active = 0.0, epoch_gnorm = 0.0;
      std::size_t num_batches = 0;
      while (auto batch = sampler.next()) {
        const std::uint64_t dropout_seed =
            derive_seed(cfg.seed, kSeedDropout, (epoch << 20) | num_batches);
        auto [emb, cache] = forward(head, *batch, Mode::kTraining, dropout_seed);
        const LossOutput out = evaluate_loss(kind, emb, use_bank ? &bank : nullptr,
                                             cfg.loss_config);
        if (!std::isfinite(out.value))
          throw NumericError("non-finite loss at epoch " + std::to_string(epoch));

        GradSnapshot head_grads = backward(head, cache, out.grad_embeddings);
        double batch_gnorm = head_grads.global_norm;
        if (use_bank) {
          const GradSnapshot bank_grads = bank_grad_snapshot(bank, out.grad_params);
          batch_gnorm = std::sqrt(head_grads.global_norm * head_grads.global_norm +
                                  bank_grads.global_norm * bank_grads.global_norm);
          adam_step(head, head_grads, adam);
          adam_step(bank_param_spans(bank), bank_grads, bank_adam);
          bank.renormalize();
        } else {
          adam_step(head, head_grads, adam);
        }
        epoch_loss += out.value;
        epoch_active += active_ratio(out);
        epoch_gnorm += batch_gnorm;
        ++num_batches;
      }
      log.epochs.push_back({epoch, epoch_loss / static_cast<double>(num_batches),
                            epoch_active / static_cast<double>(num_batches),
                            epoch_gnorm / static_cast<double>(num_batches)});
      const std::size_t completed = epoch + 1;
      if (completed % cfg.snapshot_interval == 0 && completed != cfg.epochs)
        take_snapshot(completed);
    }
    if (cfg.epochs > 0) take_snapshot(cfg.epochs);
    log.validate();

    write_train_log_csv(log, (out_dir / "train_log.csv").string());
    save_checkpoint(head, adam, (out_dir / "checkpoint.json").string());

    // Final embeddings of the test split, dumped in the feature-file format.
    auto [final_emb, final_cache] = forward(head, test_features, Mode::kInference, 0);
    FeatureDataset dump;
    dump.features = final_emb.points;
    dump.labels = final_emb.labels;
    dump.class_count = test.class_count;
    dump.split = Split::kTest;
    const std::string dump_path = (out_dir / "embeddings.json").string();
    save_features(dump, dump_path);

    // Final reports come from the written dump so that offline diagnosis of
    // the same file reproduces them exactly (the dump is f32).
    const DiagnoseResult final_reports = diagnose(dump_path, cfg.recall_ks);

    ExperimentSummary summary;
    summary.loss = cfg.loss;
    summary.final_variance = final_reports.variance;
    summary.recall = final_reports.recall;
    summary.greediness =
        log.epochs.empty() ? GreedinessSummary{} : summarize_greediness(log);
    summary.config_json = config_json;
    summary.library_version = kLibraryVersion;
    summary.log = log;
    summary.out_dir = cfg.out_dir;
    summary.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    write_summary_json(summary, (out_dir / "summary.json").string());
    return summary;
  } catch (const std::exception& e) {
    // Flush whatever trajectory exists, then mark the run as failed.
    try {
      write_train_log_csv(log, (out_dir / "train_log.csv").string());
      io::write_file((out_dir / "FAILED.json").string(),
                     json{{"error", e.what()}, {"loss", cfg.loss}}.dump(2) + "\n");
    } catch (...) {
    }
    throw;
  }
}

bool SuiteResult::all_ok() const {
  return std::all_of(rows.begin(), rows.end(), [](const SuiteRow& r) { return r.ok; });
}

SuiteResult run_suite(const std::vector<ExperimentConfig>& cfgs) {
  if (cfgs.empty()) throw ConfigError("run_suite: no configs");
  SuiteResult result;
  for (const auto& cfg : cfgs) {
    SuiteRow row;
    row.loss = cfg.loss;
    try {
      row.summary = run_experiment(cfg);
      row.ok = true;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

DiagnoseResult diagnose(const std::string& embedding_file, const std::vector<std::size_t>& ks) {
  const FeatureDataset ds = load_features(embedding_file);
  LabeledSet set;
  set.labels = ds.labels;
  set.points.reserve(ds.size());
  for (const auto& row : ds.features) set.points.push_back(l2_normalize(row));

  DiagnoseResult result;
  result.variance = cosine_distance_stats(set);
  if (ds.class_count < 2) {
    // No retrieval task without a second class.
    result.recall.k_values = ks;
    std::sort(result.recall.k_values.begin(), result.recall.k_values.end());
    result.recall.k_values.erase(
        std::unique(result.recall.k_values.begin(), result.recall.k_values.end()),
        result.recall.k_values.end());
    for (std::size_t k : result.recall.k_values) result.recall.recall_at_k[k] = 0.0;
    result.recall.query_count = set.size();
  } else {
    result.recall = recall_at_k(set, ks);
  }
  return result;
}

std::string render_variance_report(const VarianceReport& report) {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof(buf), "sigma2_intra (sq-norm): %.6f\n", report.sigma2_intra_eq1);
  out += buf;
  if (report.sigma2_inter_eq1)
    std::snprintf(buf, sizeof(buf), "sigma2_inter (sq-norm): %.6f\n", *report.sigma2_inter_eq1);
  else
    std::snprintf(buf, sizeof(buf), "sigma2_inter (sq-norm): absent (single class)\n");
  out += buf;
  std::snprintf(buf, sizeof(buf), "intra cosine mean/var:  %.6f / %.6f\n", report.intra_mean,
                report.intra_var);
  out += buf;
  if (report.inter_mean)
    std::snprintf(buf, sizeof(buf), "inter cosine mean/var:  %.6f / %.6f\n", *report.inter_mean,
                  *report.inter_var);
  else
    std::snprintf(buf, sizeof(buf), "inter cosine mean/var:  absent (single class)\n");
  out += buf;
  std::snprintf(buf, sizeof(buf), "classes: %zu\n", report.per_class_intra.size());
  out += buf;
  return out;
}

std::string render_recall_report(const RecallReport& report) {
  char buf[128];
  std::string out;
  std::snprintf(buf, sizeof(buf), "queries: %zu (%zu singleton)\n", report.query_count,
                report.singleton_query_count);
  out += buf;
  for (const auto& [k, v] : report.recall_at_k) {
    std::snprintf(buf, sizeof(buf), "r@%-3zu %.4f\n", k, v);
    out += buf;
  }
  return out;
}

namespace {

std::string fixed4(double v) {
  char b[32];
  std::snprintf(b, sizeof(b), "%.4f", v);
  return b;
}

std::string fixed4_or_dash(const std::optional<double>& v) { return v ? fixed4(*v) : "-"; }

}  // namespace

std::string render_suite_table(const SuiteResult& result) {
  char buf[320];
  std::string out;
  std::snprintf(buf, sizeof(buf), "%-12s %9s %9s %9s %9s %7s %7s %7s %8s %9s %6s\n", "loss",
                "intra_mu", "intra_s2", "inter_mu", "inter_s2", "r@1", "r@5", "r@10", "active",
                "gnorm", "ep50");
  out += buf;
  for (const auto& row : result.rows) {
    if (!row.ok) {
      std::snprintf(buf, sizeof(buf), "%-12s FAILED: %s\n", row.loss.c_str(), row.error.c_str());
      out += buf;
      continue;
    }
    const auto& s = row.summary;
    auto recall_or_dash = [&](std::size_t k) -> std::string {
      auto it = s.recall.recall_at_k.find(k);
      return it == s.recall.recall_at_k.end() ? "-" : fixed4(it->second);
    };
    const std::string ep50 =
        s.greediness.epochs_to_50pct ? std::to_string(*s.greediness.epochs_to_50pct) : "-";
    std::snprintf(buf, sizeof(buf), "%-12s %9.4f %9.4f %9s %9s %7s %7s %7s %8.3f %9.4f %6s\n",
                  row.loss.c_str(), s.final_variance.intra_mean, s.final_variance.intra_var,
                  fixed4_or_dash(s.final_variance.inter_mean).c_str(),
                  fixed4_or_dash(s.final_variance.inter_var).c_str(), recall_or_dash(1).c_str(),
                  recall_or_dash(5).c_str(), recall_or_dash(10).c_str(),
                  s.greediness.mean_active_ratio, s.greediness.mean_grad_norm, ep50.c_str());
    out += buf;
  }
  return out;
}

void write_summary_json(const ExperimentSummary& summary, const std::string& path) {
  json snapshots = json::array();
  for (const auto& [epoch, report] : summary.log.snapshots) {
    json s = variance_to_json(report);
    s["epoch"] = epoch;
    snapshots.push_back(std::move(s));
  }
  const json j{{"library_version", summary.library_version},
               {"loss", summary.loss},
               {"wall_clock_seconds", summary.wall_clock_seconds},
               {"config", json::parse(summary.config_json)},
               {"variance", variance_to_json(summary.final_variance)},
               {"greediness", greediness_to_json(summary.greediness)},
               {"recall", recall_to_json(summary.recall)},
               {"snapshots", snapshots}};
  io::write_file(path, j.dump(2) + "\n");
}

}  // namespace dml
