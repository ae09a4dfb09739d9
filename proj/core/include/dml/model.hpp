#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dml/vec.hpp"

namespace dml {

/// Dense row-major matrix, rows x cols.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}
  double& operator()(std::size_t r, std::size_t c) { return a[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return a[r * cols + c]; }
};

enum class Mode { kTraining, kInference };

/// Intermediate state of one forward pass, consumed by backward().
struct ForwardCache {
  std::vector<Vector> inputs;         // raw feature rows
  std::vector<Vector> hidden;         // tanh(W1 x + b1)
  std::vector<Vector> dropout_scale;  // per unit: 0 or 1/(1-rate); 1 in inference
  std::vector<Vector> pre_norm;       // W2 h' + b2
  std::vector<double> pre_norm_len;   // ||pre_norm||
  std::vector<Vector> normalized;     // final embeddings
  Mode mode = Mode::kTraining;
  std::uint64_t param_version = 0;
};

struct GradGroup {
  std::string name;
  std::vector<double> values;

  double squared_norm() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return s;
  }
};

/// Per-parameter-group gradients plus the overall l2 norm
/// sqrt(sum_j ||grad_j||^2).
struct GradSnapshot {
  std::vector<GradGroup> groups;
  double global_norm = 0.0;
};

double global_grad_norm(const GradSnapshot& grads);

// Two affine layers with Tanh, inverted dropout between them, and an
// L2-normalized output. Forward caches everything backward needs; backward
// produces gradients for the four parameter groups [w1, b1, w2, b2].
struct ProjectionHead {
  Matrix w1;  // d_hidden x d_in
  Vector b1;  // d_hidden
  Matrix w2;  // d_out x d_hidden
  Vector b2;  // d_out
  double dropout_rate = 0.15;
  std::uint64_t param_version = 0;  // bumped by adam_step

  std::size_t d_in() const { return w1.cols; }
  std::size_t d_hidden() const { return w1.rows; }
  std::size_t d_out() const { return w2.rows; }
  std::size_t param_count() const;

  /// Uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases, seeded.
  static ProjectionHead init(std::size_t d_in, std::size_t d_hidden, std::size_t d_out,
                             double dropout_rate, std::uint64_t seed);

  /// Mutable views of the parameter groups in fixed order [w1, b1, w2, b2].
  std::vector<std::span<double>> param_groups();
  static const std::vector<std::string>& param_group_names();
};

/// Maps features through the head. In training mode the dropout mask is a
/// deterministic function of rng_seed; in inference mode dropout is the
/// identity and rng_seed is ignored. Output embeddings are unit-norm.
std::pair<LabeledSet, ForwardCache> forward(const ProjectionHead& head, const LabeledSet& features,
                                            Mode mode, std::uint64_t rng_seed);

/// Backpropagates loss gradients w.r.t. the embeddings down to the four
/// parameter groups. The cache must come from a forward pass over the
/// head's current parameters.
GradSnapshot backward(const ProjectionHead& head, const ForwardCache& cache,
                      const std::vector<Vector>& grad_embeddings);

/// Adam with decoupled weight decay. Moment shapes mirror the parameter
/// groups they were initialized from.
struct AdamState {
  double lr = 1e-4;
  double weight_decay = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long t = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  static AdamState init_like(const std::vector<std::span<double>>& params);
};

/// One optimizer step over matching (params, grads) groups. Weight decay is
/// applied as param -= lr * wd * param before the Adam delta.
void adam_step(std::vector<std::span<double>> params, const GradSnapshot& grads, AdamState& state);

/// Convenience overload: updates the head's groups and bumps param_version.
void adam_step(ProjectionHead& head, const GradSnapshot& grads, AdamState& state);

// Checkpointing: a JSON manifest next to a little-endian f64 payload holding
// [w1, b1, w2, b2, adam.m..., adam.v...] back to back.
void save_checkpoint(const ProjectionHead& head, const AdamState& state,
                     const std::string& manifest_path);
std::pair<ProjectionHead, AdamState> load_checkpoint(const std::string& manifest_path);

}  // namespace dml
