#include "dml/diagnostics.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace dml {

namespace {

// Two-pass population variance; non-negative by construction.
std::pair<double, double> mean_and_var(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= n;
  return {mean, var};
}

}  // namespace

std::pair<double, std::optional<double>> variance_eq1(const LabeledSet& s) {
  s.validate();
  const auto centroids = class_centroids(s);
  const auto members = s.members_by_class();
  const std::size_t num_classes = centroids.size();

  double intra = 0.0;
  for (const auto& [cls, idxs] : members) {
    const Vector& mu = centroids.at(cls);
    double class_sum = 0.0;
    for (std::size_t i : idxs) {
      const double d = euclidean_distance(s.points[i], mu);
      class_sum += d * d;
    }
    intra += class_sum / static_cast<double>(idxs.size());
  }
  intra /= static_cast<double>(num_classes);

  std::optional<double> inter;
  if (num_classes >= 2) {
    double sum = 0.0;
    for (const auto& [c1, mu1] : centroids) {
      for (const auto& [c2, mu2] : centroids) {
        if (c1 == c2) continue;
        const double d = euclidean_distance(mu1, mu2);
        sum += d * d;
      }
    }
    inter = sum / static_cast<double>(num_classes * (num_classes - 1));
  }
  return {intra, inter};
}

VarianceReport cosine_distance_stats(const LabeledSet& s) {
  s.validate();
  for (std::size_t i = 0; i < s.size(); ++i)
    if (std::abs(norm(s.points[i]) - 1.0) > kUnitNormTol)
      throw ValueError("cosine_distance_stats: embedding " + std::to_string(i) +
                       " is not unit-norm");

  VarianceReport report;
  const auto [intra_eq1, inter_eq1] = variance_eq1(s);
  report.sigma2_intra_eq1 = intra_eq1;
  report.sigma2_inter_eq1 = inter_eq1;

  const auto centroids = class_centroids(s);
  std::map<int, Vector> unit_centroids;
  for (const auto& [cls, mu] : centroids) {
    if (norm(mu) == 0.0)
      throw ValueError("cosine_distance_stats: degenerate zero-norm centroid for class " +
                       std::to_string(cls));
    unit_centroids[cls] = l2_normalize(mu);
  }

  std::vector<double> pooled;
  pooled.reserve(s.size());
  for (const auto& [cls, idxs] : s.members_by_class()) {
    std::vector<double> dists;
    dists.reserve(idxs.size());
    for (std::size_t i : idxs) dists.push_back(cosine_distance(s.points[i], unit_centroids[cls]));
    const auto [m, v] = mean_and_var(dists);
    report.per_class_intra[cls] = {m, v, idxs.size()};
    pooled.insert(pooled.end(), dists.begin(), dists.end());
  }
  const auto [intra_mean, intra_var] = mean_and_var(pooled);
  report.intra_mean = intra_mean;
  report.intra_var = intra_var;

  if (unit_centroids.size() >= 2) {
    std::vector<double> dists;
    for (auto it1 = unit_centroids.begin(); it1 != unit_centroids.end(); ++it1)
      for (auto it2 = std::next(it1); it2 != unit_centroids.end(); ++it2)
        dists.push_back(cosine_distance(it1->second, it2->second));
    const auto [m, v] = mean_and_var(dists);
    report.inter_mean = m;
    report.inter_var = v;
  }
  return report;
}

void TrainLog::validate() const {
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    if (epochs[i].epoch != i)
      throw ValueError("TrainLog: epoch indices must be contiguous from 0");
    if (epochs[i].active_ratio < 0.0 || epochs[i].active_ratio > 1.0)
      throw ValueError("TrainLog: active ratio out of [0,1] at epoch " + std::to_string(i));
  }
}

std::optional<std::size_t> loss_reduction_epoch(const std::vector<double>& curve,
                                                double fraction) {
  if (curve.empty()) throw ValueError("loss_reduction_epoch: empty curve");
  if (!(fraction > 0.0 && fraction < 1.0))
    throw ConfigError("loss_reduction_epoch: fraction must lie in (0,1)");
  if (!(curve.front() > 0.0))
    throw ValueError("loss_reduction_epoch: initial loss must be positive");
  const double target = (1.0 - fraction) * curve.front();
  for (std::size_t e = 0; e < curve.size(); ++e)
    if (curve[e] <= target) return e;
  return std::nullopt;
}

GreedinessSummary summarize_greediness(const TrainLog& log) {
  if (log.epochs.empty()) throw ValueError("summarize_greediness: empty log");
  GreedinessSummary out;
  std::vector<double> curve;
  curve.reserve(log.epochs.size());
  for (const auto& e : log.epochs) {
    out.mean_active_ratio += e.active_ratio;
    out.mean_grad_norm += e.grad_norm;
    curve.push_back(e.loss);
  }
  out.mean_active_ratio /= static_cast<double>(log.epochs.size());
  out.mean_grad_norm /= static_cast<double>(log.epochs.size());
  if (curve.front() > 0.0) {
    out.epochs_to_50pct = loss_reduction_epoch(curve, 0.5);
    out.epochs_to_60pct = loss_reduction_epoch(curve, 0.6);
  }
  return out;
}

std::string format_double(double v) {
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

void write_train_log_csv(const TrainLog& log, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot open '" + path + "' for writing");
  f << "epoch,loss,active_ratio,grad_norm\n";
  for (const auto& e : log.epochs)
    f << e.epoch << ',' << format_double(e.loss) << ',' << format_double(e.active_ratio) << ','
      << format_double(e.grad_norm) << '\n';
  if (!f) throw DataError("short write to '" + path + "'");
}

TrainLog read_train_log_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open '" + path + "' for reading");
  TrainLog log;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) {
    throw DataError(path + ":" + std::to_string(line_no) + ": " + why);
  };
  if (!std::getline(f, line)) throw DataError(path + ": empty file");
  line_no = 1;
  if (line == "epoch,loss,active_ratio,grad_norm\r") line.pop_back();
  if (line != "epoch,loss,active_ratio,grad_norm") fail("unexpected CSV header");
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    double vals[4];
    for (int k = 0; k < 4; ++k) {
      if (!std::getline(ss, field, ',')) fail("expected 4 comma-separated fields");
      const char* begin = field.c_str();
      char* end = nullptr;
      vals[k] = std::strtod(begin, &end);
      if (end == begin || *end != '\0') fail("not a number: '" + field + "'");
    }
    if (std::getline(ss, field, ',')) fail("too many fields");
    log.epochs.push_back(
        {static_cast<std::size_t>(vals[0]), vals[1], vals[2], vals[3]});
  }
  return log;
}

}  // namespace dml
