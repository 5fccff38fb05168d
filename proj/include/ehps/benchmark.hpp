#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ehps/errors.hpp"
#include "ehps/metrics.hpp"

namespace ehps {

/// Ordered list of (benchmark id, primary metric) pairs. Benchmark ids are
/// dataset ids: an entry trained on dataset X has benchmark X excluded from
/// its mean primary error.
struct BenchmarkBasket {
  std::string name;
  std::vector<std::pair<std::string, MetricSpec>> entries;

  void validate() const {
    if (entries.empty()) throw validation_error("basket '" + name + "': empty");
    std::set<std::string> seen;
    for (const auto& [id, spec] : entries)
      if (!seen.insert(id).second)
        throw validation_error("basket '" + name + "': duplicate benchmark '" + id + "'");
  }
};

/// One leaderboard row: a model or a trained-on dataset with its
/// per-benchmark errors.
struct LeaderboardEntry {
  std::string subject_id;
  std::map<std::string, double> per_benchmark_mm;  // absent key = not evaluated
  std::set<std::string> trained_on;
  double mpe_mm = 0.0;
  int rank = 0;
};

/// Mean primary error over the basket, skipping benchmarks whose dataset the
/// subject trained on (in-domain exclusion). A missing value for any included
/// benchmark is an error, never a silent partial mean.
inline double mpe(const LeaderboardEntry& entry, const BenchmarkBasket& basket) {
  basket.validate();
  double sum = 0.0;
  int included = 0;
  for (const auto& [benchmark_id, spec] : basket.entries) {
    if (entry.trained_on.count(benchmark_id)) continue;
    auto it = entry.per_benchmark_mm.find(benchmark_id);
    if (it == entry.per_benchmark_mm.end())
      throw std::invalid_argument("mpe: entry '" + entry.subject_id + "' missing benchmark '" +
                                  benchmark_id + "'");
    sum += it->second;
    ++included;
  }
  if (included == 0)
    throw std::invalid_argument("mpe: entry '" + entry.subject_id +
                                "' excludes every basket benchmark");
  return sum / included;
}

/// Ascending MPE with lexicographic subject-id tie-break; ranks 1..N.
inline std::vector<LeaderboardEntry> rank_entries(std::vector<LeaderboardEntry> entries,
                                                  const BenchmarkBasket& basket) {
  for (auto& e : entries) e.mpe_mm = mpe(e, basket);
  std::sort(entries.begin(), entries.end(), [](const LeaderboardEntry& a, const LeaderboardEntry& b) {
    if (a.mpe_mm != b.mpe_mm) return a.mpe_mm < b.mpe_mm;
    return a.subject_id < b.subject_id;
  });
  for (std::size_t i = 0; i < entries.size(); ++i) entries[i].rank = static_cast<int>(i + 1);
  return entries;
}

inline std::vector<std::string> select_topk(const std::vector<LeaderboardEntry>& leaderboard,
                                            std::size_t k) {
  if (k > leaderboard.size())
    throw std::invalid_argument("select_topk: k=" + std::to_string(k) + " exceeds leaderboard size " +
                                std::to_string(leaderboard.size()));
  std::vector<std::string> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(leaderboard[i].subject_id);
  return out;
}

/// NMVE and NMJE divide by the same detection F1, so MVE/NMVE and MJE/NMJE
/// must agree.
struct NmConsistency {
  double gap = 0.0;
  double implied_f1 = 0.0;
  bool pass = false;
};

inline NmConsistency nm_consistency_check(double mve, double mje, double nmve, double nmje,
                                          double tolerance = 0.005) {
  if (!(mve > 0.0) || !(mje > 0.0) || !(nmve > 0.0) || !(nmje > 0.0))
    throw std::invalid_argument("nm_consistency_check: all four errors must be positive");
  NmConsistency result;
  result.implied_f1 = mve / nmve;
  result.gap = std::abs(mve / nmve - mje / nmje);
  result.pass = result.gap <= tolerance;
  return result;
}

enum class ReportFormat { Csv, Markdown };

namespace detail {

inline std::string mm1(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", value);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

}  // namespace detail

/// Deterministic leaderboard table: subject, one column per basket benchmark,
/// MPE, rank. Values rounded to one decimal at render time only.
inline std::string render_report(const std::vector<LeaderboardEntry>& leaderboard,
                                 const BenchmarkBasket& basket, ReportFormat format) {
  basket.validate();
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header = {"subject"};
  for (const auto& [id, spec] : basket.entries) header.push_back(id);
  header.push_back("MPE");
  header.push_back("rank");
  for (const auto& entry : leaderboard) {
    std::vector<std::string> row = {entry.subject_id};
    for (const auto& [id, spec] : basket.entries) {
      auto it = entry.per_benchmark_mm.find(id);
      row.push_back(it == entry.per_benchmark_mm.end() ? "" : detail::mm1(it->second));
    }
    row.push_back(detail::mm1(entry.mpe_mm));
    row.push_back(std::to_string(entry.rank));
    rows.push_back(std::move(row));
  }

  std::string out;
  if (format == ReportFormat::Csv) {
    auto emit = [&out](const std::vector<std::string>& row) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        out += detail::csv_field(row[i]);
      }
      out += '\n';
    };
    emit(header);
    for (const auto& row : rows) emit(row);
  } else {
    auto emit = [&out](const std::vector<std::string>& row) {
      out += '|';
      for (const auto& field : row) {
        out += ' ';
        out += field;
        out += " |";
      }
      out += '\n';
    };
    emit(header);
    out += '|';
    for (std::size_t i = 0; i < header.size(); ++i) out += " --- |";
    out += '\n';
    for (const auto& row : rows) emit(row);
  }
  return out;
}

}  // namespace ehps
