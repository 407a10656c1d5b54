#pragma once

// Rank correlation, contamination proportion and ROC-AUC.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mmirt/error.hpp"
#include "mmirt/format.hpp"
#include "mmirt/tensor.hpp"

namespace mmirt {

// 1-based ranks; tied values share the average of their positions.
inline std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return x[l] < x[r]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * double(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  const double n = double(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (sxx == 0 || syy == 0) throw ValidationError("correlation undefined for constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// Spearman rank correlation (Pearson correlation of average ranks).
inline double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("spearman: length mismatch");
  if (x.size() < 2) throw ValidationError("spearman: need at least two observations");
  auto rx = average_ranks(x);
  auto ry = average_ranks(y);
  return pearson(rx, ry);
}

// Fraction of low-quality items in a subset.
inline double contamination_gamma(std::span<const std::string> subset, const LabelMap& labels) {
  if (subset.empty()) throw ValidationError("contamination_gamma: empty subset");
  std::size_t low = 0;
  for (const auto& item : subset) {
    auto it = labels.find(item);
    if (it == labels.end()) throw ValidationError("contamination_gamma: unlabeled item '" + item + "'");
    low += is_low_quality(it->second);
  }
  return double(low) / double(subset.size());
}

// Probability that a random positive scores above a random negative, ties
// counted half (Mann-Whitney rank-sum form).
inline double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ValidationError("roc_auc: length mismatch");
  std::size_t pos = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw ValidationError("roc_auc: labels must be 0 or 1");
    pos += l;
  }
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw ValidationError("roc_auc: both classes must be present");
  auto ranks = average_ranks(scores);
  double rank_sum = 0;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k]) rank_sum += ranks[k];
  }
  const double u = rank_sum - double(pos) * double(pos + 1) / 2.0;
  return u / (double(pos) * double(neg));
}

struct MeanStd {
  double mean = 0;
  double std = 0;  // sample standard deviation (n - 1); 0 for a single value
  std::size_t count = 0;
};

inline MeanStd mean_std(std::span<const double> v) {
  MeanStd out;
  out.count = v.size();
  if (v.empty()) return out;
  out.mean = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
  if (v.size() > 1) {
    double ss = 0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(ss / double(v.size() - 1));
  }
  return out;
}

}  // namespace mmirt
