#include <gtest/gtest.h>

#include <cmath>

#include "mmirt/simulate.hpp"
#include "mmirt/training.hpp"
#include "oracles.hpp"

using namespace mmirt;

namespace {

constexpr Family kFamilies[] = {Family::IRT, Family::MIRT, Family::M2IRT, Family::M3IRT};

// Random batch over a few subjects/items with interior parameters.
struct Problem {
  FittedModel model;
  std::vector<ResponseRecord> batch;
};

Problem random_problem(Family f, std::uint64_t seed, SignConvention conv = SignConvention::Corrected) {
  Rng rng(seed);
  std::vector<ResponseRecord> recs;
  for (int k = 0; k < 12; ++k) {
    recs.push_back({"m" + std::to_string(rng.below(3)), "q" + std::to_string(rng.below(4)), kAllFormats[rng.below(4)],
                    int(rng.below(2))});
  }
  // Drop duplicate cells.
  std::vector<ResponseRecord> uniq;
  for (const auto& r : recs) {
    bool dup = false;
    for (const auto& u : uniq) dup |= (u.subject == r.subject && u.item == r.item && u.format == r.format);
    if (!dup) uniq.push_back(r);
  }
  FitConfig cfg;
  cfg.family = f;
  cfg.mirt_dim = 3;
  cfg.q = 2;
  cfg.convention = conv;
  auto m = make_model(ResponseTensor(uniq), cfg);
  // Keep |z| below the clamp, where the finite difference is flat. The M2IRT
  // logit is a product of two sums and grows fastest.
  const double hi = f == Family::M2IRT ? 1.0 : 1.9;
  for (auto& x : m.params.theta) x = rng.uniform(0.1, hi);
  for (auto& x : m.params.a) x = rng.uniform(0.1, hi);
  for (auto& x : m.params.b) x = rng.uniform(0.1, hi);
  return {std::move(m), std::move(uniq)};
}

double rel_err(double analytic, double numeric) {
  return std::fabs(analytic - numeric) / std::max(1e-6, std::max(std::fabs(analytic), std::fabs(numeric)));
}

}  // namespace

TEST(Nll, SymmetricCases) {
  FitConfig cfg;
  cfg.family = Family::IRT;
  FittedModel m(cfg, {"m1"}, {"q1@11", "q2@11"});
  m.params.theta = {1.0};
  m.params.a = {1.0, 2.0};
  m.params.b = {1.0, 1.0};
  std::vector<ResponseRecord> one{{"m1", "q1", kFullFormat, 1}};
  EXPECT_NEAR(nll(m, one), std::log(2.0), 1e-15);
  std::vector<ResponseRecord> two{{"m1", "q1", kFullFormat, 1}, {"m1", "q2", kFullFormat, 0}};
  EXPECT_NEAR(nll(m, two), 2 * std::log(2.0), 1e-15);
  EXPECT_EQ(nll(m, std::vector<ResponseRecord>{}), 0.0);
}

TEST(Gradient, MatchesCentralDifferences) {
  for (Family f : kFamilies) {
    for (auto conv : {SignConvention::Corrected, SignConvention::AsWritten}) {
      if (f != Family::M3IRT && conv == SignConvention::AsWritten) continue;
      double worst = 0;
      for (std::uint64_t draw = 0; draw < 25; ++draw) {
        auto [m, batch] = random_problem(f, 1000 * static_cast<int>(f) + draw, conv);
        auto g = grad_nll(m, batch);
        auto objective = [&, &m = m, &batch = batch] { return nll(m, batch); };
        auto check = [&](std::vector<double>& xs, const std::vector<double>& gs) {
          for (std::size_t k = 0; k < xs.size(); ++k)
            worst = std::max(worst, rel_err(gs[k], oracle::central_diff(objective, xs[k], 1e-5)));
        };
        check(m.params.theta, g.theta);
        check(m.params.a, g.a);
        check(m.params.b, g.b);
      }
      EXPECT_LT(worst, 1e-4) << to_string(f);
    }
  }
}

TEST(Gradient, SaturatedCorrectPredictionVanishes) {
  FitConfig cfg;
  cfg.family = Family::IRT;
  cfg.q = 100;
  FittedModel m(cfg, {"m1"}, {"q1@11"});
  m.params.theta = {60};
  m.params.a = {1};
  m.params.b = {0};
  std::vector<ResponseRecord> one{{"m1", "q1", kFullFormat, 1}};
  auto g = grad_nll(m, one);
  EXPECT_LT(std::fabs(g.theta[0]) + std::fabs(g.a[0]) + std::fabs(g.b[0]), 1e-10);
}

TEST(Gradient, UntouchedSubjectGetsZero) {
  auto [m, batch] = random_problem(Family::M3IRT, 77);
  std::vector<ResponseRecord> without;
  const std::string victim = batch.front().subject;
  for (const auto& r : batch)
    if (r.subject != victim) without.push_back(r);
  auto g = grad_nll(m, without);
  const auto slot = m.subject_slot(victim);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(g.theta[slot * 4 + k], 0.0);
}

TEST(Fit, SingleRecordSaturates) {
  for (Family f : kFamilies) {
    ResponseTensor train(std::vector<ResponseRecord>{{"m1", "q1", kFullFormat, 1}});
    FitConfig cfg;
    cfg.family = f;
    cfg.max_epochs = 2000;
    cfg.learning_rate = 0.05;
    auto m = fit(train, ResponseTensor{}, cfg);
    EXPECT_GE(predict(m, train)[0], 0.9) << to_string(f);
    EXPECT_TRUE(m.within_bounds());
  }
}

TEST(Fit, DeterministicAndBounded) {
  auto gt = sample_ground_truth(6, 30, 4, SignConvention::Corrected, 5);
  auto t = sample_responses(gt, kAllFormats, 1.0, 6);
  auto parts = mask_cells(t, 0.1, 0.1, 7);
  for (Family f : kFamilies) {
    FitConfig cfg;
    cfg.family = f;
    cfg.max_epochs = 30;
    cfg.batch_size = 64;
    cfg.seed = 11;
    auto a = fit(parts.train, parts.val, cfg);
    auto b = fit(parts.train, parts.val, cfg);
    EXPECT_EQ(a.params, b.params) << to_string(f);
    EXPECT_TRUE(a.within_bounds()) << to_string(f);
    EXPECT_LT(a.train_nll, a.initial_nll) << to_string(f);
    // Re-scoring the training cells reproduces the stored NLL.
    double total = 0;
    auto p = predict(a, parts.train);
    for (std::size_t k = 0; k < p.size(); ++k) {
      const int r = parts.train.records()[k].correct;
      total -= r ? std::log(p[k]) : std::log1p(-p[k]);
    }
    EXPECT_NEAR(total, a.train_nll, 1e-6 * a.train_nll) << to_string(f);
  }
}

TEST(Fit, EarlyStoppingReturnsBestSnapshot) {
  auto gt = sample_ground_truth(5, 20, 4, SignConvention::Corrected, 8);
  auto t = sample_responses(gt, kAllFormats, 1.0, 9);
  auto parts = mask_cells(t, 0.2, 0.0, 10);
  FitConfig cfg;
  cfg.max_epochs = 400;
  cfg.patience = 5;
  cfg.batch_size = 32;
  cfg.learning_rate = 0.05;
  auto m = fit(parts.train, parts.val, cfg);
  EXPECT_LT(m.epochs_run, 400);
  // Nothing later beat the snapshot, so one more evaluation agrees with the
  // best validation NLL seen.
  auto again = fit(parts.train, parts.val, cfg);
  EXPECT_EQ(nll(m, parts.val.records()), nll(again, parts.val.records()));
}

TEST(Fit, RejectsBadConfig) {
  ResponseTensor train(std::vector<ResponseRecord>{{"m1", "q1", kFullFormat, 1}});
  FitConfig cfg;
  cfg.q = 0;
  EXPECT_THROW(fit(train, {}, cfg), ValidationError);
  EXPECT_THROW(fit(ResponseTensor{}, {}, FitConfig{}), ValidationError);
}

TEST(Predict, PureAndHalfAtBalance) {
  FitConfig cfg;
  cfg.family = Family::M2IRT;
  FittedModel m(cfg, {"m1", "m2"}, {"q1", "q2"});
  m.params.theta = {1, 0, 0, 0, 2, 0, 0, 0};
  m.params.a = {1, 0, 0, 0, 1, 1, 1, 1};
  m.params.b = {1, 0, 0, 0, 3, 1, 1, 1};
  std::vector<Cell> cells{{"m1", "q1", kFullFormat}, {"m2", "q2", {0, 1}}};
  auto both = predict(m, cells);
  EXPECT_EQ(both[0], 0.5);
  std::vector<Cell> only{cells[1]};
  EXPECT_EQ(predict(m, only)[0], both[1]);
  std::vector<Cell> bad{{"m9", "q1", kFullFormat}};
  EXPECT_THROW(predict(m, bad), ValidationError);
}

TEST(Grid, SingletonMatchesPlainFit) {
  auto gt = sample_ground_truth(4, 15, 4, SignConvention::Corrected, 12);
  auto t = sample_responses(gt, kAllFormats, 1.0, 13);
  auto parts = mask_cells(t, 0.1, 0.1, 14);
  FitConfig cfg;
  cfg.max_epochs = 20;
  cfg.batch_size = 64;
  const double grid1[] = {4.0};
  auto g = grid_search_q(parts.train, parts.val, cfg, grid1);
  auto plain = fit(parts.train, parts.val, cfg);
  EXPECT_EQ(g.report.size(), 1u);
  EXPECT_EQ(g.model.params, plain.params);

  const double grid4[] = {2, 4, 8, 16};
  auto g4 = grid_search_q(parts.train, parts.val, cfg, grid4, 2);
  ASSERT_EQ(g4.report.size(), 4u);
  for (const auto& row : g4.report) EXPECT_LE(row.val_auc.value(), g4.model.val_auc.value());
  auto serial = grid_search_q(parts.train, parts.val, cfg, grid4, 1);
  EXPECT_EQ(serial.model.params, g4.model.params);
}

TEST(ModelIo, JsonRoundTrip) {
  auto gt = sample_ground_truth(3, 5, 4, SignConvention::AsWritten, 2);
  auto m = gt.to_model();
  m.val_auc = 0.8125;
  auto back = model_from_json(to_json(m));
  EXPECT_EQ(back.params, m.params);
  EXPECT_EQ(back.subject_ids, m.subject_ids);
  EXPECT_EQ(back.item_ids, m.item_ids);
  EXPECT_EQ(back.config.convention, SignConvention::AsWritten);
  EXPECT_EQ(back.val_auc, m.val_auc);
}
