#include "dml/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dml/log.hpp"
#include "dml/rng.hpp"

namespace dml {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Softmax with the max-logit shift; fills probs, returns log-sum-exp.
// Mandatory here: ArcFace logits reach |s| = 64 and overflow naive exps.
double stable_softmax(const std::vector<double>& logits, std::vector<double>& probs) {
  double max_logit = -std::numeric_limits<double>::infinity();
  for (double l : logits) max_logit = std::max(max_logit, l);
  probs.resize(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - max_logit);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
  return max_logit + std::log(sum);
}

void check_batch(const LabeledSet& batch, const char* who) {
  if (batch.points.empty()) throw ValueError(std::string(who) + ": empty batch");
  if (batch.points.size() != batch.labels.size())
    throw ShapeError(std::string(who) + ": vector/label count mismatch");
  const std::size_t d = batch.points.front().size();
  for (const auto& p : batch.points)
    if (p.size() != d) throw ShapeError(std::string(who) + ": mixed dimensions in batch");
}

std::vector<Vector> zero_grads(std::size_t n, std::size_t d) {
  return std::vector<Vector>(n, Vector(d, 0.0));
}

void axpy(double a, const Vector& x, Vector& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

void scale_grads(std::vector<Vector>& grads, double s) {
  for (auto& g : grads)
    for (double& x : g) x *= s;
}

// Sorted bank class ids plus a reverse index, with coverage checks.
struct BankIndex {
  std::vector<int> ids;
  std::map<int, std::size_t> index_of;

  BankIndex(const CenterBank& bank, const LabeledSet& batch, const char* who) {
    for (const auto& [cls, center] : bank.centers) {
      index_of.emplace(cls, ids.size());
      ids.push_back(cls);
      if (center.size() != batch.dim())
        throw ShapeError(std::string(who) + ": center dim mismatch for class " +
                         std::to_string(cls));
    }
    for (int label : batch.labels)
      if (!index_of.count(label))
        throw ValueError(std::string(who) + ": unknown class " + std::to_string(label) +
                         " (no bank entry)");
  }
};

}  // namespace

void LossConfig::validate() const {
  if (!(temperature > 0.0)) throw ConfigError("LossConfig: temperature must be > 0");
  if (!(arcface_scale > 0.0)) throw ConfigError("LossConfig: arcface_scale must be > 0");
  if (margin < 0.0) throw ConfigError("LossConfig: margin must be >= 0");
  if (center_weight < 0.0) throw ConfigError("LossConfig: center_weight must be >= 0");
  if (arcface_margin < 0.0 || arcface_margin >= kPi / 2.0)
    throw ConfigError("LossConfig: arcface_margin must lie in [0, pi/2)");
  if (!(active_eps > 0.0)) throw ConfigError("LossConfig: active_eps must be > 0");
}

void CenterBank::validate(std::size_t dim) const {
  for (const auto& [cls, c] : centers) {
    if (c.size() != dim)
      throw ShapeError("CenterBank: class " + std::to_string(cls) + " has dim " +
                       std::to_string(c.size()) + ", expected " + std::to_string(dim));
    if (!all_finite(c))
      throw ValueError("CenterBank: non-finite center for class " + std::to_string(cls));
    if (std::abs(norm(c) - 1.0) > kUnitNormTol)
      throw ValueError("CenterBank: center for class " + std::to_string(cls) +
                       " is not unit-norm");
  }
}

void CenterBank::renormalize() {
  for (auto& [cls, c] : centers) c = l2_normalize(c);
}

CenterBank CenterBank::random_init(const std::vector<int>& class_ids, std::size_t dim,
                                   std::uint64_t seed) {
  CenterBank bank;
  for (int cls : class_ids) {
    // One stream per class id: adding a class never shifts the others.
    Rng rng(derive_seed(seed, kSeedBankInit, static_cast<std::uint64_t>(cls)));
    Vector c(dim);
    for (double& x : c) x = rng.normal();
    bank.centers[cls] = l2_normalize(c);
  }
  return bank;
}

LossOutput contrastive_loss(const LabeledSet& batch, const LossConfig& cfg) {
  cfg.validate();
  check_batch(batch, "contrastive_loss");
  const std::size_t n = batch.size();
  if (n < 2) throw ValueError("contrastive_loss: need at least 2 samples to form a pair");

  LossOutput out;
  out.grad_embeddings = zero_grads(n, batch.dim());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = euclidean_distance(batch.points[i], batch.points[j]);
      const bool same = batch.labels[i] == batch.labels[j];
      double term = 0.0;
      double dterm_dd = 0.0;  // d(term)/d(d)
      if (same) {
        term = d * d;
        dterm_dd = 2.0 * d;
      } else if (d < cfg.margin) {
        const double gap = cfg.margin - d;
        term = gap * gap;
        dterm_dd = -2.0 * gap;
      }
      out.active_flags.push_back(term > 0.0);
      total += term;
      if (dterm_dd != 0.0 && d > 0.0) {
        // d(d)/dz_i = (z_i - z_j)/d
        const double coef = dterm_dd / d;
        for (std::size_t k = 0; k < batch.dim(); ++k) {
          const double diff = batch.points[i][k] - batch.points[j][k];
          out.grad_embeddings[i][k] += coef * diff;
          out.grad_embeddings[j][k] -= coef * diff;
        }
      }
    }
  }
  out.unit_count = n * (n - 1) / 2;
  out.value = total / static_cast<double>(out.unit_count);
  scale_grads(out.grad_embeddings, 1.0 / static_cast<double>(out.unit_count));
  return out;
}

LossOutput triplet_loss_batch_hard(const LabeledSet& batch, const LossConfig& cfg) {
  cfg.validate();
  check_batch(batch, "triplet_loss_batch_hard");
  const std::size_t n = batch.size();
  if (batch.class_ids().size() < 2)
    throw ValueError("triplet_loss_batch_hard: batch holds a single class, no negatives exist");

  // Pairwise Euclidean distances once; mining scans rows.
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      dist[i][j] = dist[j][i] = euclidean_distance(batch.points[i], batch.points[j]);

  LossOutput out;
  out.grad_embeddings = zero_grads(n, batch.dim());
  double total = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    std::size_t hardest_pos = n, hardest_neg = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == a) continue;
      if (batch.labels[j] == batch.labels[a]) {
        if (hardest_pos == n || dist[a][j] > dist[a][hardest_pos]) hardest_pos = j;
      } else {
        if (hardest_neg == n || dist[a][j] < dist[a][hardest_neg]) hardest_neg = j;
      }
    }
    if (hardest_pos == n) {
      warn("triplet_loss_batch_hard: anchor " + std::to_string(a) +
           " has no in-batch positive; skipped");
      ++out.skipped_units;
      continue;
    }
    const double d_ap = dist[a][hardest_pos];
    const double d_an = dist[a][hardest_neg];
    const double hinge = d_ap - d_an + cfg.margin;
    const bool active = hinge > 0.0;
    out.active_flags.push_back(active);
    ++out.unit_count;
    if (!active) continue;
    total += hinge;
    // d(d_ap)/da = (a - p)/d_ap, and the mirrored terms for p* and n*.
    if (d_ap > 0.0) {
      for (std::size_t k = 0; k < batch.dim(); ++k) {
        const double diff = (batch.points[a][k] - batch.points[hardest_pos][k]) / d_ap;
        out.grad_embeddings[a][k] += diff;
        out.grad_embeddings[hardest_pos][k] -= diff;
      }
    }
    if (d_an > 0.0) {
      for (std::size_t k = 0; k < batch.dim(); ++k) {
        const double diff = (batch.points[a][k] - batch.points[hardest_neg][k]) / d_an;
        out.grad_embeddings[a][k] -= diff;
        out.grad_embeddings[hardest_neg][k] += diff;
      }
    }
  }
  if (out.unit_count == 0)
    throw ValueError("triplet_loss_batch_hard: every anchor lacked a positive");
  out.value = total / static_cast<double>(out.unit_count);
  scale_grads(out.grad_embeddings, 1.0 / static_cast<double>(out.unit_count));
  return out;
}

LossOutput npair_loss(const LabeledSet& batch, const LossConfig& cfg) {
  cfg.validate();
  check_batch(batch, "npair_loss");

  // Anchor = first occurrence of a class, positive = second; classes ordered
  // by first occurrence.
  std::vector<int> class_order;
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto& m = members[batch.labels[i]];
    if (m.empty()) class_order.push_back(batch.labels[i]);
    m.push_back(i);
  }
  for (const auto& [cls, m] : members)
    if (m.size() != 2)
      throw ValueError("npair_loss: class " + std::to_string(cls) + " has " +
                       std::to_string(m.size()) + " members, expected exactly 2");
  const std::size_t num_classes = class_order.size();
  if (num_classes < 2) throw ValueError("npair_loss: need at least 2 classes");

  std::vector<std::size_t> anchor(num_classes), positive(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    anchor[c] = members[class_order[c]][0];
    positive[c] = members[class_order[c]][1];
  }

  LossOutput out;
  out.grad_embeddings = zero_grads(batch.size(), batch.dim());
  out.unit_count = num_classes;
  double total = 0.0;
  std::vector<double> logits(num_classes), probs;
  for (std::size_t i = 0; i < num_classes; ++i) {
    for (std::size_t j = 0; j < num_classes; ++j)
      logits[j] = dot(batch.points[anchor[i]], batch.points[positive[j]]);
    const double lse = stable_softmax(logits, probs);
    const double loss_i = lse - logits[i];
    total += loss_i;
    out.active_flags.push_back(loss_i > cfg.active_eps);
    for (std::size_t j = 0; j < num_classes; ++j) {
      const double coef = probs[j] - (j == i ? 1.0 : 0.0);
      axpy(coef, batch.points[positive[j]], out.grad_embeddings[anchor[i]]);
      axpy(coef, batch.points[anchor[i]], out.grad_embeddings[positive[j]]);
    }
  }
  out.value = total / static_cast<double>(num_classes);
  scale_grads(out.grad_embeddings, 1.0 / static_cast<double>(num_classes));
  return out;
}

LossOutput infonce_loss(const LabeledSet& batch, const LossConfig& cfg) {
  cfg.validate();
  check_batch(batch, "infonce_loss");
  const std::size_t n = batch.size();
  if (n < 2) throw ValueError("infonce_loss: need at least 2 samples");

  LossOutput out;
  out.grad_embeddings = zero_grads(n, batch.dim());
  double total = 0.0;
  std::vector<double> logits, probs;
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < n; ++i) {
    // Designated positive: the most similar same-class other (ties -> lowest
    // index, since only a strictly greater dot replaces the incumbent).
    std::size_t pos = n;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || batch.labels[j] != batch.labels[i]) continue;
      const double s = dot(batch.points[i], batch.points[j]);
      if (s > best) {
        best = s;
        pos = j;
      }
    }
    if (pos == n) {
      warn("infonce_loss: anchor " + std::to_string(i) + " has no positive; skipped");
      ++out.skipped_units;
      continue;
    }
    candidates.clear();
    logits.clear();
    std::size_t pos_slot = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      if (k == pos) pos_slot = candidates.size();
      candidates.push_back(k);
      logits.push_back(dot(batch.points[i], batch.points[k]) / cfg.temperature);
    }
    const double lse = stable_softmax(logits, probs);
    const double loss_i = lse - logits[pos_slot];
    total += loss_i;
    out.active_flags.push_back(loss_i > cfg.active_eps);
    ++out.unit_count;
    for (std::size_t slot = 0; slot < candidates.size(); ++slot) {
      const double coef = (probs[slot] - (slot == pos_slot ? 1.0 : 0.0)) / cfg.temperature;
      axpy(coef, batch.points[candidates[slot]], out.grad_embeddings[i]);
      axpy(coef, batch.points[i], out.grad_embeddings[candidates[slot]]);
    }
  }
  if (out.unit_count == 0) throw ValueError("infonce_loss: no anchor has a positive");
  out.value = total / static_cast<double>(out.unit_count);
  scale_grads(out.grad_embeddings, 1.0 / static_cast<double>(out.unit_count));
  return out;
}

LossOutput arcface_loss(const LabeledSet& batch, const CenterBank& bank, const LossConfig& cfg) {
  cfg.validate();
  check_batch(batch, "arcface_loss");
  const BankIndex idx(bank, batch, "arcface_loss");
  const std::size_t n = batch.size();
  const std::size_t num_classes = idx.ids.size();
  if (num_classes < 2) throw ValueError("arcface_loss: need at least 2 classes in bank");

  LossOutput out;
  out.grad_embeddings = zero_grads(n, batch.dim());
  for (int cls : idx.ids) out.grad_params[cls] = Vector(batch.dim(), 0.0);

  double total = 0.0;
  std::vector<double> logits(num_classes), probs;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = idx.index_of.at(batch.labels[i]);
    double dphi_dt = 1.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
      const Vector& w = bank.centers.at(idx.ids[c]);
      const double t = dot(batch.points[i], w);
      if (c == y) {
        const double tc = std::clamp(t, -1.0, 1.0);
        const double theta = std::acos(tc);
        logits[c] = cfg.arcface_scale * std::cos(theta + cfg.arcface_margin);
        // d cos(acos(t) + m) / dt = sin(theta + m) / sin(theta)
        const double sin_theta = std::max(std::sqrt(std::max(1.0 - tc * tc, 0.0)), 1e-7);
        dphi_dt = std::sin(theta + cfg.arcface_margin) / sin_theta;
      } else {
        logits[c] = cfg.arcface_scale * t;
      }
    }
    double max_other = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < num_classes; ++c)
      if (c != y) max_other = std::max(max_other, logits[c]);
    out.active_flags.push_back(!(logits[y] > max_other));

    const double lse = stable_softmax(logits, probs);
    total += lse - logits[y];
    for (std::size_t c = 0; c < num_classes; ++c) {
      const double coef =
          (probs[c] - (c == y ? 1.0 : 0.0)) * cfg.arcface_scale * (c == y ? dphi_dt : 1.0);
      axpy(coef, bank.centers.at(idx.ids[c]), out.grad_embeddings[i]);
      axpy(coef, batch.points[i], out.grad_params[idx.ids[c]]);
    }
  }
  out.unit_count = n;
  out.value = total / static_cast<double>(n);
  scale_grads(out.grad_embeddings, 1.0 / static_cast<double>(n));
  for (auto& [cls, g] : out.grad_params)
    for (double& x : g) x /= static_cast<double>(n);
  return out;
}

LossOutput scl_loss(const LabeledSet& batch, const LossConfig& cfg) {
  cfg.validate();
  check_batch(batch, "scl_loss");
  const std::size_t n = batch.size();
  if (n < 2) throw ValueError("scl_loss: need at least 2 samples");

  LossOutput out;
  out.grad_embeddings = zero_grads(n, batch.dim());
  double total = 0.0;
  std::vector<double> logits, probs;
  std::vector<std::size_t> others;
  std::vector<bool> is_positive;
  for (std::size_t i = 0; i < n; ++i) {
    others.clear();
    logits.clear();
    is_positive.clear();
    std::size_t num_pos = 0;
    for (std::size_t a = 0; a < n; ++a) {
      if (a == i) continue;
      others.push_back(a);
      logits.push_back(dot(batch.points[i], batch.points[a]) / cfg.temperature);
      const bool p = batch.labels[a] == batch.labels[i];
      is_positive.push_back(p);
      num_pos += p ? 1 : 0;
    }
    if (num_pos == 0) {
      ++out.skipped_units;
      continue;
    }
    const double lse = stable_softmax(logits, probs);
    double mean_pos_logit = 0.0;
    for (std::size_t slot = 0; slot < others.size(); ++slot)
      if (is_positive[slot]) mean_pos_logit += logits[slot];
    mean_pos_logit /= static_cast<double>(num_pos);
    const double loss_i = lse - mean_pos_logit;
    total += loss_i;
    out.active_flags.push_back(loss_i > cfg.active_eps);
    ++out.unit_count;
    for (std::size_t slot = 0; slot < others.size(); ++slot) {
      const double target = is_positive[slot] ? 1.0 / static_cast<double>(num_pos) : 0.0;
      const double coef = (probs[slot] - target) / cfg.temperature;
      axpy(coef, batch.points[others[slot]], out.grad_embeddings[i]);
      axpy(coef, batch.points[i], out.grad_embeddings[others[slot]]);
    }
  }
  if (out.unit_count == 0) throw ValueError("scl_loss: no anchor has a positive");
  out.value = total / static_cast<double>(out.unit_count);
  scale_grads(out.grad_embeddings, 1.0 / static_cast<double>(out.unit_count));
  return out;
}

LossOutput ccl_loss(const LabeledSet& batch, const CenterBank& bank, const LossConfig& cfg) {
  cfg.validate();
  check_batch(batch, "ccl_loss");
  const BankIndex idx(bank, batch, "ccl_loss");
  const std::size_t n = batch.size();
  const std::size_t num_classes = idx.ids.size();
  if (num_classes < 2) throw ValueError("ccl_loss: need at least 2 classes in bank");

  LossOutput out;
  out.grad_embeddings = zero_grads(n, batch.dim());
  for (int cls : idx.ids) out.grad_params[cls] = Vector(batch.dim(), 0.0);

  double total = 0.0;
  std::vector<double> sims(num_classes), logits(num_classes), probs;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = idx.index_of.at(batch.labels[i]);
    for (std::size_t c = 0; c < num_classes; ++c) {
      sims[c] = dot(batch.points[i], bank.centers.at(idx.ids[c]));
      logits[c] = sims[c] / cfg.temperature;
    }
    const double lse = stable_softmax(logits, probs);
    total += lse - logits[y] + cfg.center_weight * (1.0 - sims[y]);

    // Active rule is distance-based and independent of the loss form: the
    // sample sits strictly closer to some other class's center than its own.
    double max_other_sim = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < num_classes; ++c)
      if (c != y) max_other_sim = std::max(max_other_sim, sims[c]);
    out.active_flags.push_back(sims[y] < max_other_sim);

    for (std::size_t c = 0; c < num_classes; ++c) {
      const double coef = (probs[c] - (c == y ? 1.0 : 0.0)) / cfg.temperature;
      axpy(coef, bank.centers.at(idx.ids[c]), out.grad_embeddings[i]);
      axpy(coef, batch.points[i], out.grad_params[idx.ids[c]]);
    }
    axpy(-cfg.center_weight, bank.centers.at(idx.ids[y]), out.grad_embeddings[i]);
    axpy(-cfg.center_weight, batch.points[i], out.grad_params[idx.ids[y]]);
  }
  out.unit_count = n;
  out.value = total / static_cast<double>(n);
  scale_grads(out.grad_embeddings, 1.0 / static_cast<double>(n));
  for (auto& [cls, g] : out.grad_params)
    for (double& x : g) x /= static_cast<double>(n);
  return out;
}

double active_ratio(const LossOutput& out) {
  if (out.unit_count == 0) throw ValueError("active_ratio: no loss units");
  std::size_t active = 0;
  for (bool f : out.active_flags) active += f ? 1 : 0;
  return static_cast<double>(active) / static_cast<double>(out.unit_count);
}

const std::vector<std::string>& loss_names() {
  static const std::vector<std::string> names = {"contrastive", "triplet", "npair", "infonce",
                                                 "arcface",     "scl",     "ccl"};
  return names;
}

LossKind loss_kind_from_name(const std::string& name) {
  const auto& names = loss_names();
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<LossKind>(i);
  throw ConfigError("unknown loss '" + name + "'");
}

std::string loss_name(LossKind kind) { return loss_names()[static_cast<std::size_t>(kind)]; }

bool loss_uses_bank(LossKind kind) {
  return kind == LossKind::kArcFace || kind == LossKind::kCcl;
}

LossOutput evaluate_loss(LossKind kind, const LabeledSet& batch, const CenterBank* bank,
                         const LossConfig& cfg) {
  if (loss_uses_bank(kind) && bank == nullptr)
    throw ContractError("evaluate_loss: " + loss_name(kind) + " requires a CenterBank");
  switch (kind) {
    case LossKind::kContrastive:
      return contrastive_loss(batch, cfg);
    case LossKind::kTriplet:
      return triplet_loss_batch_hard(batch, cfg);
    case LossKind::kNpair:
      return npair_loss(batch, cfg);
    case LossKind::kInfoNce:
      return infonce_loss(batch, cfg);
    case LossKind::kArcFace:
      return arcface_loss(batch, *bank, cfg);
    case LossKind::kScl:
      return scl_loss(batch, cfg);
    case LossKind::kCcl:
      return ccl_loss(batch, *bank, cfg);
  }
  throw ContractError("evaluate_loss: unreachable loss kind");
}

}  // namespace dml
