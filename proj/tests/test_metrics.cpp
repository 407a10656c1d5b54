#include <gtest/gtest.h>

#include <cmath>

#include "mmirt/metrics.hpp"
#include "mmirt/rng.hpp"
#include "oracles.hpp"

using namespace mmirt;

TEST(Spearman, Examples) {
  std::vector<double> x{1, 2, 3}, rev{3, 2, 1};
  EXPECT_EQ(spearman(x, x), 1.0);
  EXPECT_EQ(spearman(x, rev), -1.0);
  std::vector<double> a{1, 2, 3, 4}, b{2, 1, 4, 3};
  EXPECT_NEAR(spearman(a, b), oracle::spearman_no_ties(a, b), 1e-15);
  EXPECT_NEAR(spearman(a, b), 0.6, 1e-15);
}

TEST(Spearman, MatchesRankFormulaWithoutTies) {
  Rng rng(8);
  for (int r = 0; r < 50; ++r) {
    std::vector<double> x(12), y(12);
    for (auto& v : x) v = rng.uniform();
    for (auto& v : y) v = rng.uniform();
    EXPECT_NEAR(spearman(x, y), oracle::spearman_no_ties(x, y), 1e-12);
  }
}

TEST(Spearman, InvariantUnderMonotoneTransform) {
  Rng rng(9);
  std::vector<double> x(20), y(20), ex(20);
  for (auto& v : x) v = rng.uniform(-2, 2);
  for (auto& v : y) v = rng.uniform(-2, 2);
  for (std::size_t k = 0; k < x.size(); ++k) ex[k] = std::exp(3 * x[k]);
  EXPECT_EQ(spearman(x, y), spearman(ex, y));
}

TEST(Spearman, TiesAndErrors) {
  std::vector<double> x{1, 1, 2, 3}, y{1, 2, 3, 4};
  // Average ranks (1.5, 1.5, 3, 4) vs (1, 2, 3, 4).
  EXPECT_NEAR(spearman(x, y), 0.9486832980505138, 1e-12);
  std::vector<double> c{2, 2, 2};
  std::vector<double> z{1, 2, 3};
  EXPECT_THROW(spearman(c, z), ValidationError);
  std::vector<double> shorter{1, 2};
  EXPECT_THROW(spearman(shorter, z), ValidationError);
}

TEST(Gamma, Counts) {
  LabelMap labels;
  std::vector<std::string> items;
  for (int k = 0; k < 10; ++k) {
    items.push_back("q" + std::to_string(k));
    labels[items.back()] = k < 3 ? QualityLabel::LowB : QualityLabel::Original;
  }
  EXPECT_NEAR(contamination_gamma(items, labels), 0.3, 1e-15);
  std::vector<std::string> clean(items.begin() + 3, items.end());
  EXPECT_EQ(contamination_gamma(clean, labels), 0.0);
  std::vector<std::string> dirty(items.begin(), items.begin() + 3);
  EXPECT_EQ(contamination_gamma(dirty, labels), 1.0);
  std::vector<std::string> reversed(items.rbegin(), items.rend());
  EXPECT_EQ(contamination_gamma(reversed, labels), contamination_gamma(items, labels));
  std::vector<std::string> unknown{"zz"};
  EXPECT_THROW(contamination_gamma(unknown, labels), ValidationError);
  EXPECT_THROW(contamination_gamma(std::vector<std::string>{}, labels), ValidationError);
}

TEST(Auc, Examples) {
  std::vector<double> s{0.1, 0.4, 0.35, 0.8};
  std::vector<int> y{0, 0, 1, 1};
  EXPECT_NEAR(roc_auc(s, y), 0.75, 1e-15);
  EXPECT_NEAR(roc_auc(s, y), oracle::auc_pairs(s, y), 1e-15);
  std::vector<double> sep{0.1, 0.2, 0.8, 0.9};
  EXPECT_EQ(roc_auc(sep, y), 1.0);
  std::vector<double> anti{0.9, 0.8, 0.2, 0.1};
  EXPECT_EQ(roc_auc(anti, y), 0.0);
  std::vector<int> one_class{1, 1, 1, 1};
  EXPECT_THROW(roc_auc(s, one_class), ValidationError);
}

TEST(Auc, MatchesPairCountWithTiesAndComplements) {
  Rng rng(10);
  for (int r = 0; r < 50; ++r) {
    std::vector<double> s(30), neg(30);
    std::vector<int> y(30);
    for (std::size_t k = 0; k < s.size(); ++k) {
      s[k] = double(rng.below(8));  // heavy ties
      y[k] = int(rng.below(2));
    }
    y[0] = 0;
    y[1] = 1;
    EXPECT_NEAR(roc_auc(s, y), oracle::auc_pairs(s, y), 1e-12);
    std::vector<double> distinct(30);
    for (std::size_t k = 0; k < s.size(); ++k) {
      distinct[k] = rng.uniform();
      neg[k] = -distinct[k];
    }
    EXPECT_NEAR(roc_auc(distinct, y) + roc_auc(neg, y), 1.0, 1e-12);
  }
}

TEST(MeanStd, SampleStd) {
  std::vector<double> v{1, 2, 3, 4};
  auto s = mean_std(v);
  EXPECT_EQ(s.mean, 2.5);
  EXPECT_NEAR(s.std, std::sqrt(5.0 / 3.0), 1e-15);
  EXPECT_EQ(s.count, 4u);
  std::vector<double> one{7};
  EXPECT_EQ(mean_std(one).std, 0.0);
}
