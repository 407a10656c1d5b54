#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "mmirt/cat.hpp"
#include "mmirt/simulate.hpp"
#include "oracles.hpp"

using namespace mmirt;

namespace {

FittedModel random_model(Family f, std::size_t n_items, std::uint64_t seed, double q = 4) {
  Rng rng(seed);
  FitConfig cfg;
  cfg.family = f;
  cfg.q = q;
  cfg.mirt_dim = 3;
  std::vector<std::string> items;
  for (std::size_t j = 0; j < n_items; ++j) {
    std::string id = "q" + std::to_string(j);
    items.push_back(is_classic(f) ? classic_item_key(id, kFullFormat) : id);
  }
  FittedModel m(cfg, {"m0"}, items);
  for (auto& x : m.params.theta) x = rng.uniform(0, q);
  for (auto& x : m.params.a) x = rng.uniform(0.05, 1.5);
  for (auto& x : m.params.b) x = rng.uniform(0, q);
  return m;
}

std::vector<std::string> pool_of(std::size_t n) {
  std::vector<std::string> p;
  for (std::size_t j = 0; j < n; ++j) p.push_back("q" + std::to_string(j));
  return p;
}

// Information matrix built from scratch in long double.
std::vector<std::vector<oracle::LD>> brute_info(const FittedModel& m, std::span<const double> theta,
                                                 const std::string& item) {
  const auto j = m.item_slot(item, kFullFormat);
  const std::size_t d = m.shape().ability;
  const double p = m.prob(theta, j, kFullFormat);
  std::vector<oracle::LD> g(d);
  auto a = m.a(j);
  for (std::size_t k = 0; k < d; ++k) g[k] = a[k];  // MIRT and corrected M3 at full format
  std::vector<std::vector<oracle::LD>> out(d, std::vector<oracle::LD>(d));
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < d; ++c) out[r][c] = oracle::LD(p) * (1 - oracle::LD(p)) * g[r] * g[c];
  return out;
}

// Greedy oracle: recompute every candidate determinant from scratch.
std::vector<std::string> brute_doptimal(const FittedModel& m, std::span<const double> theta,
                                        std::vector<std::string> pool, int steps, double eps) {
  const std::size_t d = m.shape().ability;
  std::vector<std::vector<oracle::LD>> cum(d, std::vector<oracle::LD>(d, 0));
  for (std::size_t k = 0; k < d; ++k) cum[k][k] = eps;
  std::vector<std::string> chosen;
  for (int t = 0; t < steps; ++t) {
    std::string best;
    oracle::LD best_det = -1;
    for (const auto& id : pool) {
      auto info = brute_info(m, theta, id);
      auto cand = cum;
      for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < d; ++c) cand[r][c] += info[r][c];
      const auto det = oracle::det_cofactor(cand);
      if (det > best_det || (det == best_det && id < best)) {
        best_det = det;
        best = id;
      }
    }
    auto info = brute_info(m, theta, best);
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c) cum[r][c] += info[r][c];
    chosen.push_back(best);
    pool.erase(std::find(pool.begin(), pool.end(), best));
  }
  return chosen;
}

}  // namespace

TEST(Fisher, ScalarExamples) {
  const SubjectParams sp{{1, 0, 0, 0}};
  EXPECT_EQ(fisher_scalar(sp, {{1, 0, 0, 0}, {1, 0, 0, 0}}, {0, 0}), 0.25);
  EXPECT_EQ(fisher_scalar(sp, {{2, 0, 0, 0}, {1, 0, 0, 0}}, {0, 0}), 1.0);
  EXPECT_EQ(fisher_scalar(sp, {{0, 0, 0, 0}, {3, 0, 0, 0}}, kFullFormat), 0.0);
}

TEST(Fisher, MatrixExamples) {
  const SubjectParams zero{{0, 0, 0, 0}};
  auto m1 = fisher_matrix(zero, {{1, 0, 0, 0}, {0, 0, 0, 0}}, kFullFormat, SignConvention::Corrected);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(m1(r, c), r == 0 && c == 0 ? 0.25 : 0.0);
  // theta = 0 and b = 0 give P = 0.5 at full format.
  auto m2 = fisher_matrix(zero, {{1, 1, 1, 1}, {0, 0, 0, 0}}, kFullFormat, SignConvention::Corrected);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(m2(r, c), 0.25);
  // Trace identity.
  const SubjectParams sp{{0.5, 1, 1.5, 0.2}};
  const ItemParams ip{{0.3, 0.7, 1.1, 0.4}, {2, 0.1, 0.2, 0.3}};
  for (auto s : kAllFormats) {
    const double p = prob_m3(sp, ip, s);
    const auto w = s.unsigned_vector();
    double norm2 = 0;
    for (int k = 0; k < 4; ++k) norm2 += w[k] * w[k] * ip.a[k] * ip.a[k];
    EXPECT_NEAR(fisher_matrix(sp, ip, s, SignConvention::Corrected).trace(), p * (1 - p) * norm2, 1e-15);
  }
}

TEST(Determinant, LemmaAndCofactorOracle) {
  Rng rng(4);
  for (int r = 0; r < 100; ++r) {
    auto cum = InfoMatrix::scaled_identity(4, 1e-3);
    std::vector<std::vector<oracle::LD>> ref(4, std::vector<oracle::LD>(4, 0));
    for (int k = 0; k < 4; ++k) ref[k][k] = 1e-3;
    for (int step = 0; step < 3; ++step) {
      std::vector<double> v(4);
      for (auto& x : v) x = rng.uniform(-1, 1);
      const double w = rng.uniform(0, 1);
      const double before = determinant(cum);
      cum.add_outer(w, v);
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) ref[i][j] += w * v[i] * v[j];
      EXPECT_GE(determinant(cum), before * (1 - 1e-12));
    }
    const double ref_det = double(oracle::det_cofactor(ref));
    EXPECT_NEAR(determinant(cum), ref_det, 1e-10 * std::max(1.0, std::fabs(ref_det)));
  }
}

TEST(Select, MaxInfoMatchesExhaustiveScan) {
  for (int r = 0; r < 50; ++r) {
    auto m = random_model(Family::M2IRT, 10, 100 + r);
    auto pool = pool_of(10);
    std::vector<double> th{1, 0.5, 0.5, 0.25};
    std::string best;
    double best_info = -1;
    for (const auto& id : pool) {
      const auto j = m.item_slot(id, kFullFormat);
      const auto a = m.a(j);
      const double p = double(oracle::m2(th.data(), a.data(), m.b(j).data(), 1, 1));
      const double slope = a[0] + a[1] + a[2] + a[3];
      const double info = p * (1 - p) * slope * slope;
      if (info > best_info) {
        best_info = info;
        best = id;
      }
    }
    EXPECT_EQ(select_next_maxinfo(m, th, pool), best);
  }
}

TEST(Select, MaxInfoPrefersLargerSlopeAtBalance) {
  FitConfig cfg;
  cfg.family = Family::M2IRT;
  FittedModel m(cfg, {"m0"}, {"lo", "hi"});
  m.params.a = {0.5, 0, 0, 0, 1.5, 0, 0, 0};
  m.params.b = {1, 0, 0, 0, 1, 0, 0, 0};
  std::vector<double> th{1, 0, 0, 0};
  std::vector<std::string> pool{"lo", "hi"};
  EXPECT_EQ(select_next_maxinfo(m, th, pool), "hi");
  std::vector<std::string> single{"lo"};
  EXPECT_EQ(select_next_maxinfo(m, th, single), "lo");
}

TEST(Select, DOptimalMatchesBruteForceGreedy) {
  Rng rng(55);
  int checked = 0;
  for (int r = 0; r < 100; ++r) {
    const Family f = r % 2 ? Family::M3IRT : Family::MIRT;
    const std::size_t n = 3 + rng.below(8);
    auto m = random_model(f, n, 500 + r);
    auto pool = pool_of(n);
    std::vector<double> th(m.shape().ability);
    for (auto& x : th) x = rng.uniform(0, 4);
    auto expect = brute_doptimal(m, th, pool, 3, 1e-6);
    auto cum = InfoMatrix::scaled_identity(m.shape().ability, 1e-6);
    std::vector<std::string> remaining = pool;
    for (int t = 0; t < 3; ++t) {
      auto choice = select_next_doptimal(m, cum, th, remaining);
      EXPECT_EQ(choice.item, expect[t]) << "pool " << r << " step " << t;
      cum = choice.cum_info;
      remaining.erase(std::find(remaining.begin(), remaining.end(), choice.item));
    }
    ++checked;
  }
  EXPECT_EQ(checked, 100);
}

TEST(Select, DOptimalSingleCandidate) {
  auto m = random_model(Family::M3IRT, 1, 9);
  std::vector<std::string> pool{"q0"};
  std::vector<double> th{1, 1, 1, 1};
  auto choice = select_next_doptimal(m, InfoMatrix::scaled_identity(4, 1e-6), th, pool);
  EXPECT_EQ(choice.item, "q0");
  EXPECT_GT(choice.det, 1e-24);
}

TEST(Ability, EmptyAnswersGiveMidpoint) {
  auto m = random_model(Family::M3IRT, 5, 2);
  auto th = estimate_ability(m, std::vector<Answer>{});
  for (double x : th) EXPECT_EQ(x, 2.0);
}

TEST(Ability, AllCorrectPushesToUpperBound) {
  auto m = random_model(Family::M3IRT, 20, 3);
  std::vector<Answer> ans;
  for (int j = 0; j < 20; ++j) ans.push_back({"q" + std::to_string(j), kFullFormat, 1});
  AbilityOptions opt;
  opt.ridge = 1e-9;
  opt.max_steps = 3000;
  opt.learning_rate = 0.05;
  auto th = estimate_ability(m, ans, opt);
  for (double x : th) EXPECT_NEAR(x, 4.0, 1e-9);
}

TEST(Ability, RecoversFullFormatTotal) {
  auto gt = sample_ground_truth(2, 50, 4, SignConvention::Corrected, 21, GroundTruthOptions::wide());
  auto m = gt.to_model();
  Rng rng(22);
  double worst = 0;
  for (int rep = 0; rep < 5; ++rep) {
    std::vector<Answer> sample;
    for (std::size_t j = 0; j < 50; ++j)
      sample.push_back({gt.item_ids[j], kFullFormat, rng.uniform() < gt.prob(0, j, kFullFormat) ? 1 : 0});
    auto th = estimate_ability(m, sample);
    double truth = 0, est = 0;
    for (std::size_t j = 0; j < 50; ++j) {
      truth += gt.prob(0, j, kFullFormat);
      est += m.prob(th, j, kFullFormat);
    }
    worst = std::max(worst, std::fabs(est - truth) / 50);
  }
  // Compared through the predicted full-format accuracy over the 50 items.
  EXPECT_LT(worst, 0.15);
}

TEST(Session, BudgetOneIsTopInfoAtMidpoint) {
  auto m = random_model(Family::M2IRT, 12, 31);
  auto pool = pool_of(12);
  auto mid = ability_midpoint(m);
  CatOptions opt;
  opt.criterion = Criterion::MaxInfo;
  auto s = run_cat_session(m, [](const std::string&, FormatIndicator) { return 1; }, pool, 1, opt);
  ASSERT_EQ(s.steps.size(), 1u);
  EXPECT_EQ(s.steps[0].item, select_next_maxinfo(m, mid, pool));
}

TEST(Session, DistinctSubsetOfPool) {
  for (auto crit : {Criterion::MaxInfo, Criterion::DOptimal}) {
    auto m = random_model(Family::M3IRT, 30, 41);
    auto pool = pool_of(30);
    CatOptions opt;
    opt.criterion = crit;
    Rng rng(1);
    auto s = run_cat_session(m, [&](const std::string&, FormatIndicator) { return int(rng.below(2)); }, pool, 20, opt);
    auto subset = s.subset();
    EXPECT_EQ(subset.size(), 20u);
    std::set<std::string> uniq(subset.begin(), subset.end());
    EXPECT_EQ(uniq.size(), 20u);
    for (const auto& id : subset) EXPECT_NE(std::find(pool.begin(), pool.end(), id), pool.end());
    EXPECT_FALSE(s.error);
  }
}

TEST(Session, ErrorsAndPartialSessions) {
  auto m = random_model(Family::M3IRT, 5, 42);
  auto pool = pool_of(5);
  EXPECT_THROW(run_cat_session(m, [](const std::string&, FormatIndicator) { return 1; }, pool, 6), ValidationError);
  int calls = 0;
  auto s = run_cat_session(
      m,
      [&](const std::string&, FormatIndicator) {
        if (++calls == 3) throw std::runtime_error("responder down");
        return 1;
      },
      pool, 5);
  EXPECT_EQ(s.steps.size(), 2u);
  ASSERT_TRUE(s.error);
  EXPECT_EQ(*s.error, "responder down");
  EXPECT_THROW(parse_criterion("fisher"), ValidationError);
  EXPECT_EQ(parse_criterion("maxinfo"), Criterion::MaxInfo);
  EXPECT_EQ(parse_criterion("doptimal"), Criterion::DOptimal);
}
