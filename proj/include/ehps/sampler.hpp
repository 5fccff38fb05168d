#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ehps/errors.hpp"
#include "ehps/rng.hpp"

namespace ehps {

enum class SampleStrategyKind { Balanced, Weighted, Concatenated };

/// Per-epoch sampling policy. Weighted assigns an arithmetic sequence of
/// lengths, best rank first, with first = ratio x last.
struct SampleStrategy {
  SampleStrategyKind kind = SampleStrategyKind::Balanced;
  double ratio = 4.0;  // weighted only; must exceed 1

  static SampleStrategy balanced() { return {SampleStrategyKind::Balanced, 4.0}; }
  static SampleStrategy weighted(double ratio = 4.0) {
    if (!(ratio > 1.0)) throw std::invalid_argument("weighted strategy needs ratio > 1");
    return {SampleStrategyKind::Weighted, ratio};
  }
  static SampleStrategy concatenated() { return {SampleStrategyKind::Concatenated, 4.0}; }
};

inline const char* to_string(SampleStrategyKind k) {
  switch (k) {
    case SampleStrategyKind::Balanced: return "balanced";
    case SampleStrategyKind::Weighted: return "weighted";
    case SampleStrategyKind::Concatenated: return "concatenated";
  }
  return "?";
}

inline SampleStrategyKind strategy_kind_from_string(const std::string& s) {
  if (s == "balanced") return SampleStrategyKind::Balanced;
  if (s == "weighted") return SampleStrategyKind::Weighted;
  if (s == "concatenated") return SampleStrategyKind::Concatenated;
  throw validation_error("unknown sampling strategy '" + s + "'");
}

using RankedSizes = std::vector<std::pair<std::string, std::uint64_t>>;  // best rank first
using DatasetLengths = std::vector<std::pair<std::string, std::uint64_t>>;

/// Per-dataset target length plus the deterministic index mapping realizing it.
struct SampleSchedule {
  SampleStrategy strategy;
  std::uint64_t seed = 0;
  DatasetLengths dataset_lengths;
  std::vector<std::vector<std::uint64_t>> index_map;  // aligned with dataset_lengths
};

/// Target length per dataset.
///  - balanced: floor(total/N) each, remainder one-by-one to the best ranks.
///  - weighted: arithmetic sequence descending by rank with first = ratio x
///    last and exact sum = total; real-valued lengths come from the closed
///    form last = 2 total / ((ratio + 1) N), then floors are repaired by
///    giving the leftover counts to the smallest entries that can take one
///    without breaking monotonic non-increase.
///  - concatenated: source sizes as they are; total ignored.
inline DatasetLengths plan_lengths(const RankedSizes& ranked_sizes, const SampleStrategy& strategy,
                                   std::uint64_t total) {
  const std::size_t n = ranked_sizes.size();
  if (n == 0) throw std::invalid_argument("plan_lengths: no datasets");
  DatasetLengths out;
  out.reserve(n);
  switch (strategy.kind) {
    case SampleStrategyKind::Concatenated: {
      for (const auto& [id, size] : ranked_sizes) out.emplace_back(id, size);
      return out;
    }
    case SampleStrategyKind::Balanced: {
      if (total < n)
        throw std::invalid_argument("plan_lengths: total " + std::to_string(total) +
                                    " below dataset count " + std::to_string(n));
      const std::uint64_t base = total / n;
      const std::uint64_t extra = total % n;
      for (std::size_t i = 0; i < n; ++i)
        out.emplace_back(ranked_sizes[i].first, base + (i < extra ? 1 : 0));
      return out;
    }
    case SampleStrategyKind::Weighted: {
      if (total < n)
        throw std::invalid_argument("plan_lengths: total " + std::to_string(total) +
                                    " below dataset count " + std::to_string(n));
      if (!(strategy.ratio > 1.0))
        throw std::invalid_argument("plan_lengths: weighted ratio must exceed 1");
      if (n == 1) {
        out.emplace_back(ranked_sizes[0].first, total);
        return out;
      }
      const double last = 2.0 * static_cast<double>(total) / ((strategy.ratio + 1.0) * n);
      const double first = strategy.ratio * last;
      const double step = (first - last) / static_cast<double>(n - 1);
      std::vector<std::uint64_t> lengths(n);
      std::int64_t assigned = 0;
      for (std::size_t i = 0; i < n; ++i) {
        lengths[i] = static_cast<std::uint64_t>(std::floor(first - step * static_cast<double>(i)));
        assigned += static_cast<std::int64_t>(lengths[i]);
      }
      // floors under-count by < N; hand the deficit to the smallest entries
      // first, skipping any bump that would break non-increasing order
      std::int64_t deficit = static_cast<std::int64_t>(total) - assigned;
      std::vector<bool> bumped(n, false);
      while (deficit > 0) {
        bool placed = false;
        for (std::size_t i = n; i-- > 0 && deficit > 0;) {
          if (bumped[i]) continue;
          if (i > 0 && lengths[i] + 1 > lengths[i - 1]) continue;
          lengths[i] += 1;
          bumped[i] = true;
          --deficit;
          placed = true;
        }
        if (!placed) {
          lengths[0] += static_cast<std::uint64_t>(deficit);  // unreachable for deficit < N
          deficit = 0;
        }
      }
      while (deficit < 0) {  // floors over-counted: only possible through float
        for (std::size_t i = n; i-- > 0 && deficit < 0;) {
          if (lengths[i] == 0) continue;
          if (i + 1 < n && lengths[i] - 1 < lengths[i + 1]) continue;
          lengths[i] -= 1;
          ++deficit;
        }
      }
      for (std::size_t i = 0; i < n; ++i) out.emplace_back(ranked_sizes[i].first, lengths[i]);
      return out;
    }
  }
  throw std::invalid_argument("plan_lengths: unknown strategy");
}

/// Realizes a plan as concrete per-dataset index lists. A target of L over a
/// source of size S emits floor(L/S) full passes in source order followed by
/// an (L mod S)-element draw without replacement; L < S is the pure
/// downsampling case. Streams are keyed by (seed, dataset id), so schedules
/// are identical regardless of worker count or evaluation order.
inline SampleSchedule materialize(const DatasetLengths& plan,
                                  const std::vector<std::pair<std::string, std::uint64_t>>& source_sizes,
                                  std::uint64_t seed,
                                  const SampleStrategy& strategy = SampleStrategy::balanced()) {
  SampleSchedule schedule;
  schedule.strategy = strategy;
  schedule.seed = seed;
  schedule.dataset_lengths = plan;
  schedule.index_map.reserve(plan.size());
  for (const auto& [id, target] : plan) {
    auto src = std::find_if(source_sizes.begin(), source_sizes.end(),
                            [&id = id](const auto& p) { return p.first == id; });
    if (src == source_sizes.end())
      throw std::invalid_argument("materialize: dataset '" + id + "' has no source size");
    const std::uint64_t size = src->second;
    std::vector<std::uint64_t> indices;
    if (target > 0 && size == 0)
      throw std::invalid_argument("materialize: dataset '" + id + "' is empty but target is " +
                                  std::to_string(target));
    if (target > 0) {
      indices.reserve(target);
      const std::uint64_t passes = target / size;
      const std::uint64_t remainder = target % size;
      for (std::uint64_t p = 0; p < passes; ++p)
        for (std::uint64_t i = 0; i < size; ++i) indices.push_back(i);
      if (remainder > 0) {
        SplitMix64 rng(seed, id);
        std::vector<std::uint64_t> pool(size);
        std::iota(pool.begin(), pool.end(), std::uint64_t{0});
        for (std::uint64_t k = 0; k < remainder; ++k) {  // partial Fisher-Yates
          const std::uint64_t j = k + rng.below(size - k);
          std::swap(pool[k], pool[j]);
          indices.push_back(pool[k]);
        }
      }
    }
    schedule.index_map.push_back(std::move(indices));
  }
  return schedule;
}

inline nlohmann::ordered_json schedule_to_json(const SampleSchedule& schedule) {
  nlohmann::ordered_json j;
  j["strategy"] = to_string(schedule.strategy.kind);
  if (schedule.strategy.kind == SampleStrategyKind::Weighted)
    j["ratio"] = schedule.strategy.ratio;
  j["seed"] = schedule.seed;
  nlohmann::ordered_json lengths;
  for (const auto& [id, len] : schedule.dataset_lengths) lengths[id] = len;
  j["lengths"] = std::move(lengths);
  nlohmann::ordered_json index_map;
  for (std::size_t i = 0; i < schedule.dataset_lengths.size(); ++i)
    index_map[schedule.dataset_lengths[i].first] = schedule.index_map[i];
  j["index_map"] = std::move(index_map);
  return j;
}

}  // namespace ehps
