#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "dml/error.hpp"

namespace dml {

/// An embedding is a plain dense vector of doubles; the dimension is its size.
using Vector = std::vector<double>;

/// Tolerance used everywhere a vector is required to be unit-norm.
inline constexpr double kUnitNormTol = 1e-6;

/// A set of same-dimension vectors with one non-negative class id each.
/// The unit every loss and diagnostic consumes.
struct LabeledSet {
  std::vector<Vector> points;
  std::vector<int> labels;

  std::size_t size() const { return points.size(); }
  std::size_t dim() const { return points.empty() ? 0 : points.front().size(); }

  /// Checks the structural invariants: non-empty, equal dims, label count
  /// matching, non-negative labels, finite coordinates.
  void validate() const;

  /// Sorted distinct class ids present in the set.
  std::vector<int> class_ids() const;

  /// Member indices per class id.
  std::map<int, std::vector<std::size_t>> members_by_class() const;
};

double dot(const Vector& a, const Vector& b);
double norm(const Vector& v);
bool all_finite(const Vector& v);

/// v / ||v||. Throws ValueError on a zero-norm input.
Vector l2_normalize(const Vector& v);

/// ||a - b||. Throws ShapeError on dimension mismatch.
double euclidean_distance(const Vector& a, const Vector& b);

/// 1 - <a, b> for unit vectors. Both inputs must be unit-norm within
/// kUnitNormTol; throws ValueError otherwise. Result lies in [0, 2].
double cosine_distance(const Vector& a, const Vector& b);

/// Arithmetic mean of the member vectors of each class. Centroids are NOT
/// re-normalized; diagnostics that need unit centroids normalize on their own.
std::map<int, Vector> class_centroids(const LabeledSet& s);

}  // namespace dml
