#include "dml/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dml/log.hpp"
#include "dml/rng.hpp"
#include "io_util.hpp"

namespace dml {

namespace fs = std::filesystem;

void FeatureDataset::validate() const {
  if (features.empty()) throw DataError("FeatureDataset: empty");
  if (features.size() != labels.size())
    throw DataError("FeatureDataset: feature/label count mismatch");
  const std::size_t d = features.front().size();
  std::set<int> classes;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].size() != d) throw DataError("FeatureDataset: ragged feature rows");
    if (!all_finite(features[i]))
      throw DataError("FeatureDataset: non-finite value in row " + std::to_string(i));
    if (labels[i] < 0) throw DataError("FeatureDataset: negative label in row " + std::to_string(i));
    classes.insert(labels[i]);
  }
  if (class_count != classes.size())
    throw DataError("FeatureDataset: class_count " + std::to_string(class_count) +
                    " does not match " + std::to_string(classes.size()) + " distinct labels");
}

void SyntheticSpec::validate() const {
  if (class_count < 2) throw ConfigError("SyntheticSpec: class_count must be >= 2");
  if (samples_per_class < 2) throw ConfigError("SyntheticSpec: samples_per_class must be >= 2");
  if (dim < 2) throw ConfigError("SyntheticSpec: dim must be >= 2");
  if (within_std < 0.0) throw ConfigError("SyntheticSpec: within_std must be >= 0");
  if (center_scale < 0.0) throw ConfigError("SyntheticSpec: center_scale must be >= 0");
}

FeatureDataset generate_synthetic(const SyntheticSpec& spec, Split split) {
  spec.validate();
  // Centers depend only on the seed; the split picks the noise stream, so
  // train/test sets of one spec sample the same class layout.
  Rng center_rng(derive_seed(spec.seed, kSeedSyntheticCenters));
  std::vector<Vector> centers(spec.class_count, Vector(spec.dim));
  for (auto& c : centers)
    for (double& x : c) x = center_rng.uniform(-spec.center_scale, spec.center_scale);

  Rng noise_rng(
      derive_seed(spec.seed, kSeedSyntheticNoise, split == Split::kTrain ? 0u : 1u));
  FeatureDataset ds;
  ds.split = split;
  ds.class_count = spec.class_count;
  ds.features.reserve(spec.class_count * spec.samples_per_class);
  for (std::size_t c = 0; c < spec.class_count; ++c) {
    for (std::size_t s = 0; s < spec.samples_per_class; ++s) {
      Vector x(spec.dim);
      for (std::size_t k = 0; k < spec.dim; ++k)
        x[k] = centers[c][k] + noise_rng.normal(0.0, spec.within_std);
      ds.features.push_back(std::move(x));
      ds.labels.push_back(static_cast<int>(c));
    }
  }
  return ds;
}

void save_features(const FeatureDataset& ds, const std::string& manifest_path) {
  ds.validate();
  const fs::path manifest(manifest_path);
  const std::string stem = manifest.stem().string();
  const std::string feature_name = stem + ".features.bin";
  const std::string label_name = stem + ".labels.bin";

  std::string features;
  features.reserve(ds.size() * ds.dim() * 4);
  for (const auto& row : ds.features)
    for (double v : row) io::put_f32_le(features, static_cast<float>(v));
  io::write_file((manifest.parent_path() / feature_name).string(), features);

  std::string labels;
  labels.reserve(ds.size() * 4);
  for (int l : ds.labels) io::put_u32_le(labels, static_cast<std::uint32_t>(l));
  io::write_file((manifest.parent_path() / label_name).string(), labels);

  nlohmann::json j{{"version", 1},         {"n", ds.size()},
                   {"d", ds.dim()},        {"dtype", "f32"},
                   {"label_file", label_name}, {"feature_file", feature_name}};
  io::write_file(manifest_path, j.dump(2) + "\n");
}

namespace {

FeatureDataset load_csv_features(const std::string& path) {
  const auto bytes = io::read_file(path);
  std::stringstream in(std::string(bytes.begin(), bytes.end()));
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) {
    throw DataError(path + ":" + std::to_string(line_no) + ": " + why);
  };

  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  line_no = 1;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) header.push_back(field);
  }
  if (header.empty() || header[0] != "label") fail("header must start with 'label'");
  const std::size_t d = header.size() - 1;
  if (d == 0) fail("no feature columns");
  for (std::size_t k = 0; k < d; ++k)
    if (header[k + 1] != "f" + std::to_string(k))
      fail("expected column 'f" + std::to_string(k) + "', found '" + header[k + 1] + "'");

  FeatureDataset ds;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    if (!std::getline(ss, field, ',')) fail("missing label");
    char* end = nullptr;
    const long label = std::strtol(field.c_str(), &end, 10);
    if (end == field.c_str() || *end != '\0' || label < 0) fail("bad label '" + field + "'");
    Vector row(d);
    for (std::size_t k = 0; k < d; ++k) {
      if (!std::getline(ss, field, ',')) fail("expected " + std::to_string(d) + " features");
      row[k] = std::strtod(field.c_str(), &end);
      if (end == field.c_str() || *end != '\0') fail("not a number: '" + field + "'");
      if (!std::isfinite(row[k])) fail("non-finite feature value");
    }
    if (std::getline(ss, field, ',')) fail("too many fields");
    ds.features.push_back(std::move(row));
    ds.labels.push_back(static_cast<int>(label));
  }
  if (ds.features.empty()) throw DataError(path + ": no data rows");
  ds.class_count = std::set<int>(ds.labels.begin(), ds.labels.end()).size();
  ds.validate();
  return ds;
}

}  // namespace

FeatureDataset load_features(const std::string& path) {
  if (fs::path(path).extension() == ".csv") return load_csv_features(path);

  const auto manifest_bytes = io::read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(manifest_bytes.begin(), manifest_bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw DataError("feature manifest '" + path + "': " + e.what());
  }
  if (!j.contains("version") || !j["version"].is_number_integer() || j["version"] != 1)
    throw DataError("feature manifest '" + path + "': unknown version");
  if (!j.contains("dtype") || j["dtype"] != "f32")
    throw DataError("feature manifest '" + path + "': unsupported dtype");
  const auto n = j.at("n").get<std::size_t>();
  const auto d = j.at("d").get<std::size_t>();
  if (n == 0 || d == 0) throw DataError("feature manifest '" + path + "': empty shape");

  const fs::path dir = fs::path(path).parent_path();
  const auto feature_bytes =
      io::read_file((dir / j.at("feature_file").get<std::string>()).string());
  if (feature_bytes.size() != n * d * 4)
    throw DataError("feature payload: expected " + std::to_string(n * d * 4) +
                    " bytes for " + std::to_string(n) + "x" + std::to_string(d) + ", found " +
                    std::to_string(feature_bytes.size()));
  const auto label_bytes = io::read_file((dir / j.at("label_file").get<std::string>()).string());
  if (label_bytes.size() != n * 4)
    throw DataError("label payload: expected " + std::to_string(n * 4) + " bytes, found " +
                    std::to_string(label_bytes.size()));

  FeatureDataset ds;
  ds.features.assign(n, Vector(d));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      const float v = io::get_f32_le(&feature_bytes[(i * d + k) * 4]);
      if (!std::isfinite(v))
        throw DataError("feature payload: non-finite value at row " + std::to_string(i));
      ds.features[i][k] = static_cast<double>(v);
    }
  }
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t l = io::get_u32_le(&label_bytes[i * 4]);
    if (l > static_cast<std::uint32_t>(std::numeric_limits<int>::max()))
      throw DataError("label payload: label out of range at row " + std::to_string(i));
    ds.labels[i] = static_cast<int>(l);
  }
  ds.class_count = std::set<int>(ds.labels.begin(), ds.labels.end()).size();
  ds.validate();
  return ds;
}

BatchStrategy batch_strategy_from_name(const std::string& name) {
  if (name == "pk_balanced") return BatchStrategy::kPkBalanced;
  if (name == "npair_pairs") return BatchStrategy::kNpairPairs;
  if (name == "random") return BatchStrategy::kRandom;
  throw ConfigError("unknown batch strategy '" + name + "'");
}

std::string batch_strategy_name(BatchStrategy s) {
  switch (s) {
    case BatchStrategy::kPkBalanced:
      return "pk_balanced";
    case BatchStrategy::kNpairPairs:
      return "npair_pairs";
    case BatchStrategy::kRandom:
      return "random";
  }
  return "?";
}

void BatchPlan::validate() const {
  switch (strategy) {
    case BatchStrategy::kPkBalanced:
      if (samples_per_class < 2) throw ConfigError("BatchPlan: K must be >= 2");
      if (classes_per_batch < 1) throw ConfigError("BatchPlan: P must be >= 1");
      if (classes_per_batch * samples_per_class != batch_size)
        throw ConfigError("BatchPlan: P*K must equal batch_size");
      break;
    case BatchStrategy::kNpairPairs:
      if (batch_size < 4 || batch_size % 2 != 0)
        throw ConfigError("BatchPlan: npair batches need an even size >= 4");
      break;
    case BatchStrategy::kRandom:
      if (batch_size < 2) throw ConfigError("BatchPlan: batch_size must be >= 2");
      break;
  }
}

namespace {

// Per-class index queue: shuffled, refilled with a fresh shuffle when empty.
// Draws of K <= class size stay distinct within one draw; smaller classes
// fall back to replacement (logged once).
class ClassQueue {
 public:
  ClassQueue(std::vector<std::size_t> members, int cls)
      : members_(std::move(members)), cls_(cls) {}

  std::vector<std::size_t> draw(std::size_t k, Rng& rng) {
    std::vector<std::size_t> out;
    out.reserve(k);
    if (members_.size() < k) {
      if (!warned_) {
        warn("sample_batches: class " + std::to_string(cls_) + " has " +
             std::to_string(members_.size()) + " members, drawing " + std::to_string(k) +
             " with replacement");
        warned_ = true;
      }
      out = members_;
      rng.shuffle(out);
      while (out.size() < k) out.push_back(members_[rng.uniform_index(members_.size())]);
      return out;
    }
    while (out.size() < k) {
      if (queue_.empty()) refill(rng);
      const std::size_t cand = queue_.back();
      queue_.pop_back();
      if (std::find(out.begin(), out.end(), cand) == out.end()) out.push_back(cand);
    }
    return out;
  }

 private:
  void refill(Rng& rng) {
    queue_ = members_;
    rng.shuffle(queue_);
  }

  std::vector<std::size_t> members_;
  std::vector<std::size_t> queue_;
  int cls_;
  bool warned_ = false;
};

}  // namespace

BatchSampler::BatchSampler(const FeatureDataset& ds, const BatchPlan& plan,
                           std::uint64_t epoch_seed) {
  ds.validate();
  plan.validate();
  Rng rng(derive_seed(plan.seed, kSeedBatches, epoch_seed));
  const std::size_t num_batches = std::max<std::size_t>(1, ds.size() / plan.batch_size);

  auto members = ds.as_labeled_set().members_by_class();
  std::vector<int> class_ids;
  for (const auto& [cls, m] : members) class_ids.push_back(cls);

  auto emit = [&](const std::vector<std::size_t>& idxs) {
    LabeledSet batch;
    batch.points.reserve(idxs.size());
    batch.labels.reserve(idxs.size());
    for (std::size_t i : idxs) {
      batch.points.push_back(ds.features[i]);
      batch.labels.push_back(ds.labels[i]);
    }
    batches_.push_back(std::move(batch));
  };

  if (plan.strategy == BatchStrategy::kRandom) {
    std::vector<std::size_t> order(ds.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    for (std::size_t b = 0; b < num_batches; ++b) {
      const std::size_t begin = b * plan.batch_size;
      const std::size_t end = std::min(begin + plan.batch_size, order.size());
      emit({order.begin() + static_cast<std::ptrdiff_t>(begin),
            order.begin() + static_cast<std::ptrdiff_t>(end)});
    }
    return;
  }

  const std::size_t per_class =
      plan.strategy == BatchStrategy::kNpairPairs ? 2 : plan.samples_per_class;
  const std::size_t classes_per_batch = plan.strategy == BatchStrategy::kNpairPairs
                                            ? plan.batch_size / 2
                                            : plan.classes_per_batch;
  if (class_ids.size() < classes_per_batch)
    throw ConfigError("sample_batches: plan draws " + std::to_string(classes_per_batch) +
                      " classes per batch but the dataset has " +
                      std::to_string(class_ids.size()));

  rng.shuffle(class_ids);
  std::map<int, ClassQueue> queues;
  for (int cls : class_ids) queues.emplace(cls, ClassQueue(members.at(cls), cls));

  for (std::size_t b = 0; b < num_batches; ++b) {
    std::vector<std::size_t> idxs;
    idxs.reserve(classes_per_batch * per_class);
    for (std::size_t t = 0; t < classes_per_batch; ++t) {
      const int cls = class_ids[(b * classes_per_batch + t) % class_ids.size()];
      for (std::size_t i : queues.at(cls).draw(per_class, rng)) idxs.push_back(i);
    }
    emit(idxs);
  }
}

std::optional<LabeledSet> BatchSampler::next() {
  if (cursor_ >= batches_.size()) return std::nullopt;
  return batches_[cursor_++];
}

}  // namespace dml
