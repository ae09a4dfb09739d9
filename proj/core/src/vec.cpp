#include "dml/vec.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace dml {

void LabeledSet::validate() const {
  if (points.empty()) throw ValueError("LabeledSet: empty set");
  if (points.size() != labels.size())
    throw ShapeError("LabeledSet: " + std::to_string(points.size()) + " vectors vs " +
                     std::to_string(labels.size()) + " labels");
  const std::size_t d = points.front().size();
  if (d == 0) throw ShapeError("LabeledSet: zero-dimensional vectors");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].size() != d)
      throw ShapeError("LabeledSet: vector " + std::to_string(i) + " has dim " +
                       std::to_string(points[i].size()) + ", expected " + std::to_string(d));
    if (labels[i] < 0) throw ValueError("LabeledSet: negative label at index " + std::to_string(i));
    if (!all_finite(points[i]))
      throw ValueError("LabeledSet: non-finite coordinate in vector " + std::to_string(i));
  }
}

std::vector<int> LabeledSet::class_ids() const {
  std::set<int> ids(labels.begin(), labels.end());
  return {ids.begin(), ids.end()};
}

std::map<int, std::vector<std::size_t>> LabeledSet::members_by_class() const {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  return by_class;
}

double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size())
    throw ShapeError("dot: dims " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const Vector& v) { return std::sqrt(dot(v, v)); }

bool all_finite(const Vector& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

Vector l2_normalize(const Vector& v) {
  const double n = norm(v);
  if (n == 0.0) throw ValueError("l2_normalize: zero-norm input");
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
  return out;
}

double euclidean_distance(const Vector& a, const Vector& b) {
  if (a.size() != b.size())
    throw ShapeError("euclidean_distance: dims " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double cosine_distance(const Vector& a, const Vector& b) {
  if (a.size() != b.size())
    throw ShapeError("cosine_distance: dims " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  if (std::abs(norm(a) - 1.0) > kUnitNormTol || std::abs(norm(b) - 1.0) > kUnitNormTol)
    throw ValueError("cosine_distance: inputs must be unit-norm");
  return 1.0 - dot(a, b);
}

std::map<int, Vector> class_centroids(const LabeledSet& s) {
  s.validate();
  const std::size_t d = s.dim();
  std::map<int, Vector> sums;
  std::map<int, std::size_t> counts;
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto [it, inserted] = sums.try_emplace(s.labels[i], Vector(d, 0.0));
    for (std::size_t k = 0; k < d; ++k) it->second[k] += s.points[i][k];
    ++counts[s.labels[i]];
  }
  for (auto& [cls, sum] : sums) {
    const double inv = 1.0 / static_cast<double>(counts[cls]);
    for (double& x : sum) x *= inv;
  }
  return sums;
}

}  // namespace dml
