#pragma once

// Test-only oracles. Every function here recomputes a quantity along an
// independent route (literal formula transcription, exhaustive enumeration,
// finite differences) and must stay decoupled from the library code paths it
// checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "dml/losses.hpp"
#include "dml/rng.hpp"
#include "dml/vec.hpp"

namespace oracle {

using dml::CenterBank;
using dml::LabeledSet;
using dml::LossConfig;
using dml::Vector;

// ---------------------------------------------------------------------------
// Random inputs

inline Vector random_unit_vector(dml::Rng& rng, std::size_t dim) {
  Vector v(dim);
  for (double& x : v) x = rng.normal();
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  for (double& x : v) x /= n;
  return v;
}

/// classes x per_class unit vectors, labels grouped by class.
inline LabeledSet random_unit_set(dml::Rng& rng, std::size_t classes, std::size_t per_class,
                                  std::size_t dim) {
  LabeledSet s;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      s.points.push_back(random_unit_vector(rng, dim));
      s.labels.push_back(static_cast<int>(c));
    }
  }
  return s;
}

inline CenterBank random_bank(dml::Rng& rng, const std::vector<int>& class_ids, std::size_t dim) {
  CenterBank bank;
  for (int cls : class_ids) bank.centers[cls] = random_unit_vector(rng, dim);
  return bank;
}

// ---------------------------------------------------------------------------
// Finite differences

/// Central finite differences of f over every embedding coordinate.
inline std::vector<Vector> fd_grad_embeddings(const std::function<double(const LabeledSet&)>& f,
                                              LabeledSet batch, double h = 1e-5) {
  std::vector<Vector> grads(batch.size(), Vector(batch.dim(), 0.0));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (std::size_t k = 0; k < batch.dim(); ++k) {
      const double orig = batch.points[i][k];
      batch.points[i][k] = orig + h;
      const double up = f(batch);
      batch.points[i][k] = orig - h;
      const double down = f(batch);
      batch.points[i][k] = orig;
      grads[i][k] = (up - down) / (2.0 * h);
    }
  }
  return grads;
}

/// Central finite differences of f over every bank-center coordinate.
inline std::map<int, Vector> fd_grad_centers(const std::function<double(const CenterBank&)>& f,
                                             CenterBank bank, double h = 1e-5) {
  std::map<int, Vector> grads;
  for (auto& [cls, center] : bank.centers) {
    Vector g(center.size(), 0.0);
    for (std::size_t k = 0; k < center.size(); ++k) {
      const double orig = center[k];
      center[k] = orig + h;
      const double up = f(bank);
      center[k] = orig - h;
      const double down = f(bank);
      center[k] = orig;
      g[k] = (up - down) / (2.0 * h);
    }
    grads[cls] = std::move(g);
  }
  return grads;
}

/// |a - f| / max(|a|, |f|, floor); the floor keeps exact-zero coordinates
/// from dividing by zero.
inline double rel_err(double analytic, double fd, double floor = 1e-4) {
  return std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), floor});
}

inline double max_rel_err(const std::vector<Vector>& analytic, const std::vector<Vector>& fd) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i)
    for (std::size_t k = 0; k < analytic[i].size(); ++k)
      worst = std::max(worst, rel_err(analytic[i][k], fd[i][k]));
  return worst;
}

inline double max_rel_err(const std::map<int, Vector>& analytic, const std::map<int, Vector>& fd) {
  double worst = 0.0;
  for (const auto& [cls, g] : analytic)
    for (std::size_t k = 0; k < g.size(); ++k) worst = std::max(worst, rel_err(g[k], fd.at(cls)[k]));
  return worst;
}

// ---------------------------------------------------------------------------
// Literal loss transcriptions (values only, naive exponentials)

inline double sq_dist(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

inline double dot(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double contrastive_literal(const LabeledSet& b, const LossConfig& cfg) {
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    for (std::size_t j = i + 1; j < b.size(); ++j) {
      const double d = std::sqrt(sq_dist(b.points[i], b.points[j]));
      if (b.labels[i] == b.labels[j])
        total += d * d;
      else
        total += std::pow(std::max(0.0, cfg.margin - d), 2.0);
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

/// Exhaustive batch-hard search: scan every positive and negative per anchor.
inline double triplet_bruteforce(const LabeledSet& b, const LossConfig& cfg) {
  double total = 0.0;
  std::size_t anchors = 0;
  for (std::size_t a = 0; a < b.size(); ++a) {
    double worst_pos = -1.0, best_neg = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (j == a) continue;
      const double d = std::sqrt(sq_dist(b.points[a], b.points[j]));
      if (b.labels[j] == b.labels[a])
        worst_pos = std::max(worst_pos, d);
      else
        best_neg = std::min(best_neg, d);
    }
    if (worst_pos < 0.0 || !std::isfinite(best_neg)) continue;
    total += std::max(0.0, worst_pos - best_neg + cfg.margin);
    ++anchors;
  }
  return total / static_cast<double>(anchors);
}

/// log(1 + sum_{j != i} exp(s_ij - s_ii)) over an (anchor, positive) batch --
/// a different algebraic route than softmax cross-entropy.
inline double npair_literal(const LabeledSet& b, const LossConfig&) {
  std::vector<std::size_t> anchor, positive;
  std::vector<int> seen;
  for (std::size_t i = 0; i < b.size(); ++i) {
    bool first = std::find(seen.begin(), seen.end(), b.labels[i]) == seen.end();
    if (first) {
      seen.push_back(b.labels[i]);
      anchor.push_back(i);
      positive.push_back(i);  // replaced by the second member below
    } else {
      positive[std::find(seen.begin(), seen.end(), b.labels[i]) - seen.begin()] = i;
    }
  }
  const std::size_t n = anchor.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s_ii = dot(b.points[anchor[i]], b.points[positive[i]]);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) sum += std::exp(dot(b.points[anchor[i]], b.points[positive[j]]) - s_ii);
    total += std::log1p(sum);
  }
  return total / static_cast<double>(n);
}

inline double infonce_literal(const LabeledSet& b, const LossConfig& cfg) {
  double total = 0.0;
  std::size_t anchors = 0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    std::size_t pos = b.size();
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (j == i || b.labels[j] != b.labels[i]) continue;
      const double s = dot(b.points[i], b.points[j]);
      if (s > best) {
        best = s;
        pos = j;
      }
    }
    if (pos == b.size()) continue;
    double denom = 0.0;
    for (std::size_t k = 0; k < b.size(); ++k)
      if (k != i) denom += std::exp(dot(b.points[i], b.points[k]) / cfg.temperature);
    total += -std::log(std::exp(dot(b.points[i], b.points[pos]) / cfg.temperature) / denom);
    ++anchors;
  }
  return total / static_cast<double>(anchors);
}

inline double scl_literal(const LabeledSet& b, const LossConfig& cfg) {
  double total = 0.0;
  std::size_t anchors = 0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    std::vector<std::size_t> positives;
    for (std::size_t p = 0; p < b.size(); ++p)
      if (p != i && b.labels[p] == b.labels[i]) positives.push_back(p);
    if (positives.empty()) continue;
    double denom = 0.0;
    for (std::size_t a = 0; a < b.size(); ++a)
      if (a != i) denom += std::exp(dot(b.points[i], b.points[a]) / cfg.temperature);
    double sum = 0.0;
    for (std::size_t p : positives)
      sum += std::log(std::exp(dot(b.points[i], b.points[p]) / cfg.temperature) / denom);
    total += -sum / static_cast<double>(positives.size());
    ++anchors;
  }
  return total / static_cast<double>(anchors);
}

inline double arcface_literal(const LabeledSet& b, const CenterBank& bank, const LossConfig& cfg) {
  std::vector<int> ids;
  for (const auto& [cls, c] : bank.centers) ids.push_back(cls);
  double total = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    std::vector<double> logits(ids.size());
    std::size_t y = ids.size();
    for (std::size_t c = 0; c < ids.size(); ++c) {
      const double t = dot(b.points[i], bank.centers.at(ids[c]));
      if (ids[c] == b.labels[i]) {
        y = c;
        const double theta = std::acos(std::clamp(t, -1.0, 1.0));
        logits[c] = cfg.arcface_scale * std::cos(theta + cfg.arcface_margin);
      } else {
        logits[c] = cfg.arcface_scale * t;
      }
    }
    double denom = 0.0;
    for (double l : logits) denom += std::exp(l);
    total += -std::log(std::exp(logits[y]) / denom);
  }
  return total / static_cast<double>(b.size());
}

inline double ccl_literal(const LabeledSet& b, const CenterBank& bank, const LossConfig& cfg) {
  std::vector<int> ids;
  for (const auto& [cls, c] : bank.centers) ids.push_back(cls);
  double total = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    double denom = 0.0, target = 0.0, own_dot = 0.0;
    for (int cls : ids) {
      const double e = std::exp(dot(b.points[i], bank.centers.at(cls)) / cfg.temperature);
      denom += e;
      if (cls == b.labels[i]) {
        target = e;
        own_dot = dot(b.points[i], bank.centers.at(cls));
      }
    }
    total += -std::log(target / denom) + cfg.center_weight * (1.0 - own_dot);
  }
  return total / static_cast<double>(b.size());
}

// ---------------------------------------------------------------------------
// Geometry oracles

/// Literal double-loop transcription of the squared-norm variance pair.
inline std::pair<double, std::optional<double>> variance_bruteforce(const LabeledSet& s) {
  std::vector<int> ids;
  for (int l : s.labels)
    if (std::find(ids.begin(), ids.end(), l) == ids.end()) ids.push_back(l);
  std::sort(ids.begin(), ids.end());
  const std::size_t C = ids.size();

  std::map<int, Vector> mu;
  std::map<int, std::size_t> count;
  for (int cls : ids) mu[cls] = Vector(s.dim(), 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t k = 0; k < s.dim(); ++k) mu[s.labels[i]][k] += s.points[i][k];
    ++count[s.labels[i]];
  }
  for (int cls : ids)
    for (double& x : mu[cls]) x /= static_cast<double>(count[cls]);

  double intra = 0.0;
  for (int cls : ids) {
    double class_sum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s.labels[i] == cls) class_sum += sq_dist(s.points[i], mu[cls]);
    intra += class_sum / static_cast<double>(count[cls]);
  }
  intra /= static_cast<double>(C);

  std::optional<double> inter;
  if (C >= 2) {
    double sum = 0.0;
    for (int c1 : ids)
      for (int c2 : ids)
        if (c1 != c2) sum += sq_dist(mu[c1], mu[c2]);
    inter = sum / static_cast<double>(C * (C - 1));
  }
  return {intra, inter};
}

/// Brute-force Recall@k: full distance matrix, full sort per query.
inline std::map<std::size_t, double> recall_bruteforce(const LabeledSet& s,
                                                       const std::vector<std::size_t>& ks) {
  const std::size_t n = s.size();
  std::map<std::size_t, double> out;
  for (std::size_t k : ks) out[k] = 0.0;
  for (std::size_t q = 0; q < n; ++q) {
    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == q) continue;
      ranked.emplace_back(1.0 - dot(s.points[q], s.points[j]), j);
    }
    std::sort(ranked.begin(), ranked.end());
    for (std::size_t k : ks) {
      bool hit = false;
      for (std::size_t r = 0; r < k && r < ranked.size(); ++r)
        hit = hit || s.labels[ranked[r].second] == s.labels[q];
      if (hit) out[k] += 1.0;
    }
  }
  for (auto& [k, v] : out) v /= static_cast<double>(n);
  return out;
}

// ---------------------------------------------------------------------------
// Orthogonal transforms

/// Random orthogonal matrix via Gram-Schmidt on Gaussian rows.
inline std::vector<Vector> random_orthogonal(dml::Rng& rng, std::size_t dim) {
  std::vector<Vector> q;
  while (q.size() < dim) {
    Vector v(dim);
    for (double& x : v) x = rng.normal();
    for (const auto& u : q) {
      const double proj = dot(v, u);
      for (std::size_t k = 0; k < dim; ++k) v[k] -= proj * u[k];
    }
    double n = std::sqrt(dot(v, v));
    if (n < 1e-8) continue;  // essentially-dependent draw, retry
    for (double& x : v) x /= n;
    q.push_back(std::move(v));
  }
  return q;
}

inline Vector apply_matrix(const std::vector<Vector>& q, const Vector& x) {
  Vector y(q.size(), 0.0);
  for (std::size_t r = 0; r < q.size(); ++r) y[r] = dot(q[r], x);
  return y;
}

inline LabeledSet apply_matrix(const std::vector<Vector>& q, const LabeledSet& s) {
  LabeledSet out;
  out.labels = s.labels;
  for (const auto& p : s.points) out.points.push_back(apply_matrix(q, p));
  return out;
}

}  // namespace oracle
