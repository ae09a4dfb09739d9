#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "dml/vec.hpp"

namespace dml {

struct RecallReport {
  std::vector<std::size_t> k_values;
  std::map<std::size_t, double> recall_at_k;
  std::size_t query_count = 0;
  /// Queries whose class has no other member; they miss at every k.
  std::size_t singleton_query_count = 0;
};

/// The k nearest gallery entries to the query by ascending cosine distance,
/// ties broken by lower index. All vectors must be unit-norm.
std::vector<std::pair<std::size_t, double>> nearest_neighbors(const Vector& query,
                                                              const LabeledSet& gallery,
                                                              std::size_t k);

/// Leave-one-out Recall@k: each sample queries the other n-1 samples; a query
/// scores at k if any of its k nearest neighbors shares its class.
RecallReport recall_at_k(const LabeledSet& s, const std::vector<std::size_t>& ks);

}  // namespace dml
