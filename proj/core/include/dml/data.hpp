#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dml/vec.hpp"

namespace dml {

enum class Split { kTrain, kTest };

/// Feature vectors with labels; raw backbone-style inputs to the projection
/// head. Features are NOT normalized at ingestion -- normalization happens in
/// the head's output stage only.
struct FeatureDataset {
  std::vector<Vector> features;
  std::vector<int> labels;
  std::size_t class_count = 0;
  Split split = Split::kTrain;

  std::size_t size() const { return features.size(); }
  std::size_t dim() const { return features.empty() ? 0 : features.front().size(); }
  void validate() const;
  LabeledSet as_labeled_set() const { return {features, labels}; }
};

/// Gaussian class clusters: centers uniform per coordinate in
/// [-center_scale, center_scale], members = center + N(0, within_std^2 I).
struct SyntheticSpec {
  std::size_t class_count = 20;
  std::size_t samples_per_class = 50;
  std::size_t dim = 64;
  double center_scale = 1.0;
  double within_std = 0.35;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Deterministic for a given (spec.seed, split). Class centers depend only on
/// spec.seed, so the train and test splits of one spec share classes while
/// drawing independent noise.
FeatureDataset generate_synthetic(const SyntheticSpec& spec, Split split = Split::kTrain);

// Feature file format: a JSON manifest
//   {"version":1,"n":..,"d":..,"dtype":"f32","label_file":..,"feature_file":..}
// next to two payloads: features as little-endian f32, row-major, exactly
// n*d*4 bytes; labels as little-endian u32, n*4 bytes. Paths in the manifest
// are relative to its directory. A CSV file (header label,f0,...,f{d-1}) is
// accepted as a fallback for small sets.

/// Writes manifest plus payloads ("<stem>.features.bin", "<stem>.labels.bin").
void save_features(const FeatureDataset& ds, const std::string& manifest_path);

/// Loads a manifest (.json) or CSV (.csv) feature file. Throws DataError on
/// size mismatches, non-finite values, or unknown versions.
FeatureDataset load_features(const std::string& path);

enum class BatchStrategy { kPkBalanced, kNpairPairs, kRandom };

BatchStrategy batch_strategy_from_name(const std::string& name);
std::string batch_strategy_name(BatchStrategy s);

struct BatchPlan {
  BatchStrategy strategy = BatchStrategy::kPkBalanced;
  std::size_t classes_per_batch = 16;  // P
  std::size_t samples_per_class = 4;   // K
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;

  void validate() const;
};

/// One epoch's worth of class-structured batches; deterministic for a given
/// (plan.seed, epoch_seed). Each consumer owns its own sampler.
class BatchSampler {
 public:
  BatchSampler(const FeatureDataset& ds, const BatchPlan& plan, std::uint64_t epoch_seed);

  std::size_t batches_per_epoch() const { return batches_.size(); }
  /// Next batch of this epoch, or nullopt when the epoch is exhausted.
  std::optional<LabeledSet> next();

 private:
  std::vector<LabeledSet> batches_;
  std::size_t cursor_ = 0;
};

}  // namespace dml
