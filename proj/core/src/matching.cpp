#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "skintrial/alignment.hpp"
#include "skintrial/error.hpp"

namespace skintrial {

namespace {

float squared_distance(const Descriptor& a, const Descriptor& b) noexcept {
  float acc = 0.0f;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const float d = a.values[i] - b.values[i];
    acc += d * d;
  }
  return acc;
}

}  // namespace

std::vector<MatchPair> match_knn(std::span<const Descriptor> query,
                                 std::span<const Descriptor> train, double ratio_threshold) {
  if (query.empty() || train.empty()) {
    throw Error(ErrorKind::EmptyDescriptorSet, "matching needs non-empty descriptor sets");
  }
  std::vector<MatchPair> candidates;
  for (std::size_t q = 0; q < query.size(); ++q) {
    float best = std::numeric_limits<float>::infinity();
    float second = best;
    std::size_t best_idx = 0;
    for (std::size_t t = 0; t < train.size(); ++t) {
      const float d = squared_distance(query[q], train[t]);
      if (d < best) {
        second = best;
        best = d;
        best_idx = t;
      } else if (d < second) {
        second = d;
      }
    }
    const double d1 = std::sqrt(static_cast<double>(best));
    const double d2 = std::sqrt(static_cast<double>(second));
    double ratio = 0.0;
    if (std::isinf(d2)) {
      ratio = 0.0;
    } else if (d2 == 0.0) {
      ratio = 1.0;
    } else {
      ratio = d1 / d2;
    }
    if (ratio < ratio_threshold) candidates.push_back({q, best_idx, d1, ratio});
  }

  std::sort(candidates.begin(), candidates.end(), [](const MatchPair& a, const MatchPair& b) {
    return std::tie(a.distance, a.query_idx) < std::tie(b.distance, b.query_idx);
  });
  std::vector<bool> taken(train.size(), false);
  std::vector<MatchPair> out;
  out.reserve(candidates.size());
  for (const auto& m : candidates) {
    if (taken[m.train_idx]) continue;
    taken[m.train_idx] = true;
    out.push_back(m);
  }
  std::sort(out.begin(), out.end(),
            [](const MatchPair& a, const MatchPair& b) { return a.query_idx < b.query_idx; });
  return out;
}

}  // namespace skintrial
