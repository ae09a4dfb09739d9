#include "dml/model.hpp"

#include <cmath>
#include <filesystem>

#include <json.hpp>

#include "dml/rng.hpp"
#include "io_util.hpp"

namespace dml {

namespace {

void affine(const Matrix& w, const Vector& b, const Vector& x, Vector& out) {
  out.assign(w.rows, 0.0);
  for (std::size_t r = 0; r < w.rows; ++r) {
    double s = b[r];
    const double* row = &w.a[r * w.cols];
    for (std::size_t c = 0; c < w.cols; ++c) s += row[c] * x[c];
    out[r] = s;
  }
}

}  // namespace

double global_grad_norm(const GradSnapshot& grads) {
  double s = 0.0;
  for (const auto& g : grads.groups) s += g.squared_norm();
  return std::sqrt(s);
}

std::size_t ProjectionHead::param_count() const {
  return w1.a.size() + b1.size() + w2.a.size() + b2.size();
}

ProjectionHead ProjectionHead::init(std::size_t d_in, std::size_t d_hidden, std::size_t d_out,
                                    double dropout_rate, std::uint64_t seed) {
  if (d_in == 0 || d_hidden == 0 || d_out == 0)
    throw ConfigError("ProjectionHead: dimensions must be positive");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    throw ConfigError("ProjectionHead: dropout_rate must lie in [0, 1)");
  ProjectionHead head;
  head.w1 = Matrix(d_hidden, d_in);
  head.b1.assign(d_hidden, 0.0);
  head.w2 = Matrix(d_out, d_hidden);
  head.b2.assign(d_out, 0.0);
  head.dropout_rate = dropout_rate;
  Rng rng(derive_seed(seed, kSeedHeadInit));
  const double bound1 = std::sqrt(6.0 / static_cast<double>(d_in + d_hidden));
  for (double& w : head.w1.a) w = rng.uniform(-bound1, bound1);
  const double bound2 = std::sqrt(6.0 / static_cast<double>(d_hidden + d_out));
  for (double& w : head.w2.a) w = rng.uniform(-bound2, bound2);
  return head;
}

std::vector<std::span<double>> ProjectionHead::param_groups() {
  return {std::span<double>(w1.a), std::span<double>(b1), std::span<double>(w2.a),
          std::span<double>(b2)};
}

const std::vector<std::string>& ProjectionHead::param_group_names() {
  static const std::vector<std::string> names = {"w1", "b1", "w2", "b2"};
  return names;
}

std::pair<LabeledSet, ForwardCache> forward(const ProjectionHead& head, const LabeledSet& features,
                                            Mode mode, std::uint64_t rng_seed) {
  features.validate();
  if (features.dim() != head.d_in())
    throw ShapeError("forward: feature dim " + std::to_string(features.dim()) +
                     " does not match head input dim " + std::to_string(head.d_in()));

  const std::size_t n = features.size();
  ForwardCache cache;
  cache.mode = mode;
  cache.param_version = head.param_version;
  cache.inputs = features.points;
  cache.hidden.resize(n);
  cache.dropout_scale.resize(n);
  cache.pre_norm.resize(n);
  cache.pre_norm_len.resize(n);
  cache.normalized.resize(n);

  const bool drop = mode == Mode::kTraining && head.dropout_rate > 0.0;
  const double keep = 1.0 - head.dropout_rate;
  Rng rng(rng_seed);

  LabeledSet embeddings;
  embeddings.labels = features.labels;
  embeddings.points.resize(n);
  Vector a1;
  for (std::size_t i = 0; i < n; ++i) {
    affine(head.w1, head.b1, features.points[i], a1);
    Vector& h = cache.hidden[i];
    h.resize(head.d_hidden());
    for (std::size_t u = 0; u < head.d_hidden(); ++u) h[u] = std::tanh(a1[u]);

    Vector& scale = cache.dropout_scale[i];
    scale.assign(head.d_hidden(), 1.0);
    if (drop) {
      // Inverted dropout: kept units are scaled by 1/keep so inference is a
      // plain pass-through.
      for (double& s : scale) s = rng.uniform() < keep ? 1.0 / keep : 0.0;
    }
    Vector dropped(head.d_hidden());
    for (std::size_t u = 0; u < head.d_hidden(); ++u) dropped[u] = h[u] * scale[u];

    affine(head.w2, head.b2, dropped, cache.pre_norm[i]);
    const double len = norm(cache.pre_norm[i]);
    if (!(len > 0.0))
      throw ValueError("forward: degenerate zero-norm output for sample " + std::to_string(i));
    cache.pre_norm_len[i] = len;
    Vector& z = cache.normalized[i];
    z.resize(head.d_out());
    for (std::size_t u = 0; u < head.d_out(); ++u) z[u] = cache.pre_norm[i][u] / len;
    embeddings.points[i] = z;
  }
  return {std::move(embeddings), std::move(cache)};
}

GradSnapshot backward(const ProjectionHead& head, const ForwardCache& cache,
                      const std::vector<Vector>& grad_embeddings) {
  if (cache.param_version != head.param_version)
    throw ContractError("backward: cache was built from different parameters");
  if (grad_embeddings.size() != cache.inputs.size())
    throw ContractError("backward: gradient count " + std::to_string(grad_embeddings.size()) +
                        " does not match cached batch size " +
                        std::to_string(cache.inputs.size()));

  const std::size_t d_in = head.d_in(), d_hidden = head.d_hidden(), d_out = head.d_out();
  GradSnapshot snap;
  snap.groups = {{"w1", std::vector<double>(d_hidden * d_in, 0.0)},
                 {"b1", std::vector<double>(d_hidden, 0.0)},
                 {"w2", std::vector<double>(d_out * d_hidden, 0.0)},
                 {"b2", std::vector<double>(d_out, 0.0)}};
  auto& g_w1 = snap.groups[0].values;
  auto& g_b1 = snap.groups[1].values;
  auto& g_w2 = snap.groups[2].values;
  auto& g_b2 = snap.groups[3].values;

  Vector g_pre(d_out), g_hidden(d_hidden);
  for (std::size_t i = 0; i < cache.inputs.size(); ++i) {
    const Vector& g = grad_embeddings[i];
    if (g.size() != d_out) throw ContractError("backward: embedding gradient dim mismatch");
    const Vector& z = cache.normalized[i];

    // Through u -> u/||u||: grad_u = (g - (g.z)z) / ||u||.
    const double g_dot_z = dot(g, z);
    const double inv_len = 1.0 / cache.pre_norm_len[i];
    for (std::size_t u = 0; u < d_out; ++u) g_pre[u] = (g[u] - g_dot_z * z[u]) * inv_len;

    const Vector& h = cache.hidden[i];
    const Vector& scale = cache.dropout_scale[i];
    for (std::size_t r = 0; r < d_out; ++r) {
      const double gr = g_pre[r];
      g_b2[r] += gr;
      double* w2_grad_row = &g_w2[r * d_hidden];
      for (std::size_t c = 0; c < d_hidden; ++c) w2_grad_row[c] += gr * h[c] * scale[c];
    }
    for (std::size_t c = 0; c < d_hidden; ++c) {
      double s = 0.0;
      for (std::size_t r = 0; r < d_out; ++r) s += head.w2(r, c) * g_pre[r];
      // dropout then tanh'
      g_hidden[c] = s * scale[c] * (1.0 - h[c] * h[c]);
    }
    const Vector& x = cache.inputs[i];
    for (std::size_t r = 0; r < d_hidden; ++r) {
      const double gr = g_hidden[r];
      g_b1[r] += gr;
      double* w1_grad_row = &g_w1[r * d_in];
      for (std::size_t c = 0; c < d_in; ++c) w1_grad_row[c] += gr * x[c];
    }
  }
  snap.global_norm = global_grad_norm(snap);
  return snap;
}

AdamState AdamState::init_like(const std::vector<std::span<double>>& params) {
  AdamState state;
  for (const auto& p : params) {
    state.m.emplace_back(p.size(), 0.0);
    state.v.emplace_back(p.size(), 0.0);
  }
  return state;
}

void adam_step(std::vector<std::span<double>> params, const GradSnapshot& grads,
               AdamState& state) {
  if (params.size() != grads.groups.size() || params.size() != state.m.size())
    throw ContractError("adam_step: group count mismatch");
  for (std::size_t g = 0; g < params.size(); ++g)
    if (params[g].size() != grads.groups[g].values.size() ||
        params[g].size() != state.m[g].size())
      throw ContractError("adam_step: shape mismatch in group '" + grads.groups[g].name + "'");

  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t g = 0; g < params.size(); ++g) {
    auto p = params[g];
    const auto& grad = grads.groups[g].values;
    auto& m = state.m[g];
    auto& v = state.v[g];
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] -= state.lr * state.weight_decay * p[i];  // decoupled decay
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * grad[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

void adam_step(ProjectionHead& head, const GradSnapshot& grads, AdamState& state) {
  adam_step(head.param_groups(), grads, state);
  ++head.param_version;
}

void save_checkpoint(const ProjectionHead& head, const AdamState& state,
                     const std::string& manifest_path) {
  if (state.m.size() != 4)
    throw ContractError("save_checkpoint: optimizer state does not match a projection head");
  const std::filesystem::path manifest(manifest_path);
  const std::string tensor_name = manifest.stem().string() + ".bin";

  std::string payload;
  auto put_group = [&payload](const std::vector<double>& vals) {
    for (double v : vals) io::put_f64_le(payload, v);
  };
  put_group(head.w1.a);
  put_group(head.b1);
  put_group(head.w2.a);
  put_group(head.b2);
  for (const auto& m : state.m) put_group(m);
  for (const auto& v : state.v) put_group(v);
  io::write_file((manifest.parent_path() / tensor_name).string(), payload);

  nlohmann::json j{{"version", 1},
                   {"dtype", "f64"},
                   {"tensor_file", tensor_name},
                   {"d_in", head.d_in()},
                   {"d_hidden", head.d_hidden()},
                   {"d_out", head.d_out()},
                   {"dropout_rate", head.dropout_rate},
                   {"adam",
                    {{"lr", state.lr},
                     {"weight_decay", state.weight_decay},
                     {"beta1", state.beta1},
                     {"beta2", state.beta2},
                     {"eps", state.eps},
                     {"t", state.t}}}};
  io::write_file(manifest_path, j.dump(2) + "\n");
}

std::pair<ProjectionHead, AdamState> load_checkpoint(const std::string& manifest_path) {
  const auto bytes = io::read_file(manifest_path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint manifest '" + manifest_path + "': " + e.what());
  }
  if (!j.contains("version") || j["version"] != 1)
    throw DataError("checkpoint manifest: unsupported version");
  if (!j.contains("dtype") || j["dtype"] != "f64")
    throw DataError("checkpoint manifest: unsupported dtype");

  ProjectionHead head;
  const auto d_in = j.at("d_in").get<std::size_t>();
  const auto d_hidden = j.at("d_hidden").get<std::size_t>();
  const auto d_out = j.at("d_out").get<std::size_t>();
  head.w1 = Matrix(d_hidden, d_in);
  head.b1.assign(d_hidden, 0.0);
  head.w2 = Matrix(d_out, d_hidden);
  head.b2.assign(d_out, 0.0);
  head.dropout_rate = j.at("dropout_rate").get<double>();

  AdamState state;
  const auto& adam = j.at("adam");
  state.lr = adam.at("lr").get<double>();
  state.weight_decay = adam.at("weight_decay").get<double>();
  state.beta1 = adam.at("beta1").get<double>();
  state.beta2 = adam.at("beta2").get<double>();
  state.eps = adam.at("eps").get<double>();
  state.t = adam.at("t").get<long>();

  const std::filesystem::path manifest(manifest_path);
  const auto payload =
      io::read_file((manifest.parent_path() / j.at("tensor_file").get<std::string>()).string());
  const std::size_t group_elems = head.param_count();
  if (payload.size() != group_elems * 3 * sizeof(double))
    throw DataError("checkpoint payload: expected " +
                    std::to_string(group_elems * 3 * sizeof(double)) + " bytes, found " +
                    std::to_string(payload.size()));

  std::size_t off = 0;
  auto take_group = [&payload, &off](std::vector<double>& vals) {
    for (double& v : vals) {
      v = io::get_f64_le(&payload[off]);
      off += sizeof(double);
    }
  };
  take_group(head.w1.a);
  take_group(head.b1);
  take_group(head.w2.a);
  take_group(head.b2);
  for (auto p : head.param_groups()) {
    state.m.emplace_back(p.size(), 0.0);
    state.v.emplace_back(p.size(), 0.0);
  }
  for (auto& m : state.m) take_group(m);
  for (auto& v : state.v) take_group(v);
  return {std::move(head), std::move(state)};
}

}  // namespace dml
