#pragma once

// CSV/JSON tables for experiment results.

#include <charconv>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmirt/experiments.hpp"

namespace mmirt {

// Shortest representation that round-trips.
inline std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline void write_table_header(std::ostream& os) { os << "method,fraction_or_level,mean,std,replicas\n"; }

inline void write_table_row(std::ostream& os, std::string_view method, double x, const MeanStd& s) {
  os << method << ',' << format_double(x) << ',' << format_double(s.mean) << ',' << format_double(s.std) << ','
     << s.count << '\n';
}

enum class RankingMetric { Spearman, Gamma };

inline void write_ranking_csv(std::ostream& os, const RankingReport& r, RankingMetric metric) {
  write_table_header(os);
  for (const auto& row : r.rows)
    write_table_row(os, to_string(row.method), row.fraction, metric == RankingMetric::Spearman ? row.spearman : row.gamma);
}

inline nlohmann::ordered_json to_json(const MeanStd& s) {
  return {{"mean", s.mean}, {"std", s.std}, {"replicas", s.count}};
}

inline nlohmann::ordered_json to_json(const RankingReport& r) {
  nlohmann::ordered_json j;
  j["replicas"] = r.replicas;
  j["held_out"] = r.held_out;
  j["fractions"] = r.fractions;
  auto& methods = j["methods"] = nlohmann::ordered_json::object();
  for (const auto& row : r.rows) {
    auto& arr = methods[std::string(to_string(row.method))];
    arr.push_back({{"fraction", row.fraction},
                   {"spearman", to_json(row.spearman)},
                   {"gamma", to_json(row.gamma)},
                   {"spearman_values", row.spearman_values},
                   {"gamma_values", row.gamma_values}});
  }
  return j;
}

inline void write_prediction_csv(std::ostream& os, Family family, const std::vector<PredictionRow>& rows) {
  write_table_header(os);
  for (const auto& row : rows) write_table_row(os, to_string(family), row.level, row.auc);
}

inline nlohmann::ordered_json to_json(Family family, const std::vector<PredictionRow>& rows) {
  nlohmann::ordered_json j;
  j["family"] = to_string(family);
  j["levels"] = nlohmann::ordered_json::array();
  for (const auto& row : rows)
    j["levels"].push_back({{"level", row.level}, {"auc", to_json(row.auc)}, {"values", row.values}});
  return j;
}

}  // namespace mmirt
