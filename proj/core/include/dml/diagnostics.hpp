#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dml/vec.hpp"

namespace dml {

// Embedding-geometry statistics. Two conventions coexist on purpose:
//  - squared-norm variances over raw (non-renormalized) class centroids,
//  - cosine-distance statistics against re-normalized centroids.

struct ClassStats {
  double mean = 0.0;
  double var = 0.0;  // population variance
  std::size_t count = 0;
};

struct VarianceReport {
  // (1/C) sum_c (1/N_c) sum_{i in c} ||z_i - mu_c||^2
  double sigma2_intra_eq1 = 0.0;
  // (1/(C(C-1))) sum_{c != c'} ||mu_c - mu_c'||^2; absent when C = 1
  std::optional<double> sigma2_inter_eq1;

  // Cosine distance of each sample to its re-normalized class centroid,
  // pooled over all samples.
  double intra_mean = 0.0;
  double intra_var = 0.0;
  // Cosine distance between re-normalized centroids, unordered pairs;
  // absent when C = 1.
  std::optional<double> inter_mean;
  std::optional<double> inter_var;

  std::map<int, ClassStats> per_class_intra;
};

/// Eq-style squared-norm variances: (intra, inter). Inter is absent for a
/// single class.
std::pair<double, std::optional<double>> variance_eq1(const LabeledSet& s);

/// Full report: squared-norm variances plus cosine-distance statistics.
/// Embeddings must be unit-norm. Throws ValueError if a class centroid has
/// zero norm (exactly antipodal members).
VarianceReport cosine_distance_stats(const LabeledSet& s);

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double active_ratio = 0.0;
  double grad_norm = 0.0;
};

/// Per-epoch training trajectory plus periodic geometry snapshots, keyed by
/// the number of completed epochs.
struct TrainLog {
  std::string loss;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::vector<EpochRecord> epochs;
  std::vector<std::pair<std::size_t, VarianceReport>> snapshots;

  void validate() const;
};

/// Smallest epoch index e with curve[e] <= (1 - fraction) * curve[0], or
/// absent if the curve never gets there. curve[0] must be positive.
std::optional<std::size_t> loss_reduction_epoch(const std::vector<double>& curve, double fraction);

struct GreedinessSummary {
  double mean_active_ratio = 0.0;
  double mean_grad_norm = 0.0;
  std::optional<std::size_t> epochs_to_50pct;
  std::optional<std::size_t> epochs_to_60pct;
};

GreedinessSummary summarize_greediness(const TrainLog& log);

// CSV round-trip for the per-epoch trajectory. Fixed header:
// epoch,loss,active_ratio,grad_norm
void write_train_log_csv(const TrainLog& log, const std::string& path);
/// Parses only the per-epoch columns; snapshots are not stored in the CSV.
/// Throws DataError with a line number on malformed input.
TrainLog read_train_log_csv(const std::string& path);

/// Shortest decimal text that round-trips the double exactly; used for every
/// number written to CSV so that identical runs produce identical bytes.
std::string format_double(double v);

}  // namespace dml
