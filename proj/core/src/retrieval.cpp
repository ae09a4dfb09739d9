#include "dml/retrieval.hpp"

#include <algorithm>
#include <cmath>

#include "dml/log.hpp"

namespace dml {

namespace {

// Sorts (distance, index) ascending with the index as tie-break, so equal
// distances resolve identically on every platform.
void sort_hits(std::vector<std::pair<std::size_t, double>>& hits) {
  std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    return a.first < b.first;
  });
}

}  // namespace

std::vector<std::pair<std::size_t, double>> nearest_neighbors(const Vector& query,
                                                              const LabeledSet& gallery,
                                                              std::size_t k) {
  gallery.validate();
  if (k == 0 || k > gallery.size())
    throw ConfigError("nearest_neighbors: k = " + std::to_string(k) + " with gallery of " +
                      std::to_string(gallery.size()));
  std::vector<std::pair<std::size_t, double>> hits;
  hits.reserve(gallery.size());
  for (std::size_t i = 0; i < gallery.size(); ++i)
    hits.emplace_back(i, cosine_distance(query, gallery.points[i]));
  sort_hits(hits);
  hits.resize(k);
  return hits;
}

RecallReport recall_at_k(const LabeledSet& s, const std::vector<std::size_t>& ks) {
  s.validate();
  if (ks.empty()) throw ConfigError("recall_at_k: no k values");
  const std::size_t n = s.size();
  std::size_t max_k = 0;
  for (std::size_t k : ks) {
    if (k == 0) throw ConfigError("recall_at_k: k must be positive");
    if (k >= n)
      throw ConfigError("recall_at_k: k = " + std::to_string(k) +
                        " must be smaller than the set size " + std::to_string(n));
    max_k = std::max(max_k, k);
  }

  RecallReport report;
  report.k_values = ks;
  std::sort(report.k_values.begin(), report.k_values.end());
  report.k_values.erase(std::unique(report.k_values.begin(), report.k_values.end()),
                        report.k_values.end());
  report.query_count = n;
  std::map<std::size_t, std::size_t> hits_at_k;
  for (std::size_t k : report.k_values) hits_at_k[k] = 0;

  std::vector<std::pair<std::size_t, double>> ranked;
  for (std::size_t q = 0; q < n; ++q) {
    bool has_same_class = false;
    for (std::size_t j = 0; j < n && !has_same_class; ++j)
      has_same_class = j != q && s.labels[j] == s.labels[q];
    if (!has_same_class) {
      ++report.singleton_query_count;
      continue;  // counts as a miss at every k
    }

    ranked.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == q) continue;
      ranked.emplace_back(j, cosine_distance(s.points[q], s.points[j]));
    }
    sort_hits(ranked);
    // First rank at which a same-class neighbor appears.
    std::size_t first_hit = n;
    for (std::size_t r = 0; r < std::min(max_k, ranked.size()); ++r) {
      if (s.labels[ranked[r].first] == s.labels[q]) {
        first_hit = r + 1;
        break;
      }
    }
    for (std::size_t k : report.k_values)
      if (first_hit <= k) ++hits_at_k[k];
  }
  if (report.singleton_query_count > 0)
    warn("recall_at_k: " + std::to_string(report.singleton_query_count) +
         " singleton-class queries counted as misses");

  for (std::size_t k : report.k_values)
    report.recall_at_k[k] = static_cast<double>(hits_at_k[k]) / static_cast<double>(n);
  return report;
}

}  // namespace dml
