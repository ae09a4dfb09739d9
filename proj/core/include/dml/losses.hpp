#pragma once

#include <map>
#include <string>
#include <vector>

#include "dml/vec.hpp"

namespace dml {

// Seven supervised embedding objectives. Every loss takes a batch of
// unit-norm embeddings with class labels and returns the mean loss over its
// units (samples, pairs or anchors), one active flag per unit, and analytic
// gradients with respect to each input embedding. ArcFace and CCL also take
// a CenterBank and return gradients for its per-class vectors.
//
// Inputs are consumed as raw coordinates: no loss re-normalizes or
// re-validates unit norms internally, so the formulas stay differentiable in
// an open neighborhood of the sphere and numerical-derivative probes remain
// in contract. Callers (the trainer, which always feeds L2-normalized head
// outputs) own the unit-norm precondition.

struct LossConfig {
  double margin = 1.0;          // Euclidean margin for contrastive/triplet
  double temperature = 0.07;    // softmax temperature for InfoNCE/SCL/CCL
  double center_weight = 10.0;  // CCL pull-to-own-center weight
  double arcface_margin = 0.5;  // additive angular margin, radians
  double arcface_scale = 64.0;  // logit scale
  double active_eps = 1e-6;     // "nonzero loss" threshold for softmax losses

  void validate() const;
};

/// Per-class unit-norm reference vectors: CCL centers, ArcFace class weights.
struct CenterBank {
  std::map<int, Vector> centers;

  /// Checks one center per class, matching dim, unit-norm within kUnitNormTol.
  void validate(std::size_t dim) const;

  /// Rescale every center back to unit norm (after an optimizer step).
  void renormalize();

  /// Random unit centers for the given class ids.
  static CenterBank random_init(const std::vector<int>& class_ids, std::size_t dim,
                                std::uint64_t seed);
};

struct LossOutput {
  double value = 0.0;
  /// One flag per loss unit. Unit order: pairs in (i<j) lexicographic order
  /// for contrastive; evaluated anchors in batch order for triplet, InfoNCE
  /// and SCL; anchors in class first-occurrence order for N-pair; samples in
  /// batch order for ArcFace and CCL.
  std::vector<bool> active_flags;
  /// One gradient per input embedding, same dim (zero for skipped anchors).
  std::vector<Vector> grad_embeddings;
  /// Gradients for loss-internal parameters, keyed by class id
  /// (ArcFace class weights, CCL centers). Empty for the other losses.
  std::map<int, Vector> grad_params;
  std::size_t unit_count = 0;
  /// Units dropped with a warning (anchors without positives etc.).
  std::size_t skipped_units = 0;
};

// All pairs, L = y*d^2 + (1-y)*max(0, m-d)^2 with Euclidean d; mean over pairs.
LossOutput contrastive_loss(const LabeledSet& batch, const LossConfig& cfg);

// Batch-hard mining: per anchor, the farthest positive and nearest negative,
// L_a = max(0, d(a,p*) - d(a,n*) + m); mean over anchors. An anchor is active
// iff d(a,p*) + m > d(a,n*).
LossOutput triplet_loss_batch_hard(const LabeledSet& batch, const LossConfig& cfg);

// Batch of exactly two samples per class (first occurrence = anchor, second =
// positive); per anchor, softmax over anchor-positive dot products.
LossOutput npair_loss(const LabeledSet& batch, const LossConfig& cfg);

// One designated positive per anchor (its most similar same-class sample),
// every other batch member a candidate; temperature-scaled softmax.
LossOutput infonce_loss(const LabeledSet& batch, const LossConfig& cfg);

// Cross-entropy over scaled class cosines with the target logit replaced by
// cos(theta_y + margin). Bank vectors act as the class weight columns.
LossOutput arcface_loss(const LabeledSet& batch, const CenterBank& bank, const LossConfig& cfg);

// Supervised contrastive: all same-class others are positives, averaged
// inside the log-softmax over every other batch member.
LossOutput scl_loss(const LabeledSet& batch, const LossConfig& cfg);

// Center softmax over bank classes plus a weighted cosine pull to the own
// center. A sample is active iff it sits closer (in cosine distance) to some
// other class's center than to its own.
LossOutput ccl_loss(const LabeledSet& batch, const CenterBank& bank, const LossConfig& cfg);

/// Fraction of units with a true active flag.
double active_ratio(const LossOutput& out);

// Uniform entry point used by the trainer and the CLI.
enum class LossKind { kContrastive, kTriplet, kNpair, kInfoNce, kArcFace, kScl, kCcl };

const std::vector<std::string>& loss_names();
LossKind loss_kind_from_name(const std::string& name);
std::string loss_name(LossKind kind);
bool loss_uses_bank(LossKind kind);

/// Dispatch on kind; `bank` may be null for losses that do not use one.
LossOutput evaluate_loss(LossKind kind, const LabeledSet& batch, const CenterBank* bank,
                         const LossConfig& cfg);

}  // namespace dml
