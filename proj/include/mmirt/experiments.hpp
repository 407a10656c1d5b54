#pragma once

// Hold-one-out subset ranking and held-out response prediction harnesses.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mmirt/cat.hpp"
#include "mmirt/error.hpp"
#include "mmirt/metrics.hpp"
#include "mmirt/model.hpp"
#include "mmirt/parallel.hpp"
#include "mmirt/rng.hpp"
#include "mmirt/simulate.hpp"
#include "mmirt/tensor.hpp"
#include "mmirt/training.hpp"

namespace mmirt {

// Mean model probability of success over a pool of items.
inline double estimated_accuracy(const FittedModel& m, std::span<const double> theta, std::span<const std::string> pool,
                                 FormatIndicator s = kFullFormat) {
  if (pool.empty()) throw ValidationError("estimated_accuracy: empty pool");
  double total = 0;
  for (const auto& id : pool) total += m.prob(theta, m.item_slot(id, s), s);
  return total / double(pool.size());
}

inline double estimated_accuracy(const FittedModel& m, const SubjectParams& sp, std::span<const std::string> pool,
                                 FormatIndicator s = kFullFormat) {
  return estimated_accuracy(m, std::span<const double>(sp.theta), pool, s);
}

// Subset-selection methods compared by the ranking experiment.
enum class Method { Random, IRT, MIRT, M2IRT, M3IRT };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::Random: return "random";
    case Method::IRT: return "irt";
    case Method::MIRT: return "mirt";
    case Method::M2IRT: return "m2irt";
    case Method::M3IRT: return "m3irt";
  }
  return "random";
}

inline Method parse_method(std::string_view s) {
  if (s == "random") return Method::Random;
  if (s == "irt") return Method::IRT;
  if (s == "mirt") return Method::MIRT;
  if (s == "m2irt") return Method::M2IRT;
  if (s == "m3irt") return Method::M3IRT;
  throw ValidationError("unknown method '" + std::string(s) + "'");
}

inline Family method_family(Method m) {
  switch (m) {
    case Method::IRT: return Family::IRT;
    case Method::MIRT: return Family::MIRT;
    case Method::M2IRT: return Family::M2IRT;
    default: return Family::M3IRT;
  }
}

// Scalar-ability families use maximum information, vector families D-optimality.
inline Criterion method_criterion(Method m) {
  return (m == Method::IRT || m == Method::M2IRT) ? Criterion::MaxInfo : Criterion::DOptimal;
}

// How the held-out subject's full-pool accuracy is estimated by the model
// methods. Imputed: observed outcomes on the subset plus model probabilities
// for the rest of the pool. Model: model probabilities everywhere. Subset:
// raw accuracy on the subset. Random always uses raw subset accuracy.
enum class AccuracyEstimator { Imputed, Model, Subset };

inline AccuracyEstimator parse_estimator(std::string_view s) {
  if (s == "imputed") return AccuracyEstimator::Imputed;
  if (s == "model") return AccuracyEstimator::Model;
  if (s == "subset") return AccuracyEstimator::Subset;
  throw ValidationError("unknown estimator '" + std::string(s) + "'");
}

inline std::string_view to_string(AccuracyEstimator e) {
  switch (e) {
    case AccuracyEstimator::Imputed: return "imputed";
    case AccuracyEstimator::Model: return "model";
    case AccuracyEstimator::Subset: return "subset";
  }
  return "imputed";
}

// 1% .. 50% in 1% steps.
inline std::vector<double> default_fractions() {
  std::vector<double> f;
  for (int k = 1; k <= 50; ++k) f.push_back(k / 100.0);
  return f;
}

inline std::size_t subset_budget(double fraction, std::size_t pool) {
  auto k = static_cast<std::size_t>(std::llround(fraction * double(pool)));
  return std::clamp<std::size_t>(k, 1, pool);
}

struct RankingOptions {
  std::vector<Method> methods{Method::Random, Method::IRT, Method::MIRT, Method::M2IRT, Method::M3IRT};
  std::vector<double> fractions = default_fractions();
  std::size_t replicas = 24;
  std::uint64_t seed = 0;
  FitConfig fit;  // family is set per method
  FormatIndicator format = kFullFormat;
  AccuracyEstimator estimator = AccuracyEstimator::Imputed;
  AbilityOptions ability;
  std::size_t jobs = 1;
};

struct MethodFractionStats {
  Method method;
  double fraction = 0;
  MeanStd spearman;
  MeanStd gamma;
  std::vector<double> spearman_values;  // per replica, replica order
  std::vector<double> gamma_values;
};

struct RankingReport {
  std::vector<double> fractions;
  std::vector<Method> methods;
  std::size_t replicas = 0;
  std::size_t fits = 0;
  std::size_t fits_out_of_bounds = 0;
  std::vector<std::string> held_out;  // subject per replica
  std::vector<MethodFractionStats> rows;  // method-major

  const MethodFractionStats& at(Method m, double fraction) const {
    for (const auto& r : rows)
      if (r.method == m && r.fraction == fraction) return r;
    throw ValidationError("no ranking row for " + std::string(to_string(m)));
  }
};

namespace detail {

struct ReplicaOutcome {
  // [method][fraction]
  std::vector<std::vector<double>> spearman;
  std::vector<std::vector<double>> gamma;
  std::size_t fits = 0;
  std::size_t fits_out_of_bounds = 0;
};

inline ReplicaOutcome run_ranking_replica(const ResponseTensor& t, const LabelMap& labels, const RankingOptions& opt,
                                          std::size_t replica, std::size_t held, std::span<const double> truth) {
  const std::string& subject = t.subjects()[held];
  const auto& pool = t.items();
  const std::size_t n = pool.size();
  std::size_t max_budget = 0;
  for (double f : opt.fractions) max_budget = std::max(max_budget, subset_budget(f, n));

  // Held-out subject's outcomes over the pool, in pool order.
  std::vector<int> outcome(n);
  for (std::size_t j = 0; j < n; ++j) {
    auto r = t.lookup(subject, pool[j], opt.format);
    if (!r) throw ValidationError("held-out subject '" + subject + "' has no response for item '" + pool[j] + "'");
    outcome[j] = *r;
  }
  std::unordered_map<std::string, std::size_t> pool_index;
  for (std::size_t j = 0; j < n; ++j) pool_index.emplace(pool[j], j);

  ReplicaOutcome out;
  for (std::size_t mi = 0; mi < opt.methods.size(); ++mi) {
    const Method method = opt.methods[mi];
    std::vector<std::size_t> order;  // selected pool indices, selection order
    std::vector<std::vector<double>> thetas;  // ability after each selection
    std::optional<FittedModel> model;
    if (method == Method::Random) {
      Rng rng(derive_seed(opt.seed, {replica, 0x4a4d}));
      order = rng.sample_indices(n, max_budget);
    } else {
      FitConfig cfg = opt.fit;
      cfg.family = method_family(method);
      cfg.seed = derive_seed(opt.seed, {replica, static_cast<std::uint64_t>(method), 0xf17});
      auto train = t.filter([&](const ResponseRecord& r) {
        return r.subject != subject && (!is_classic(cfg.family) || r.format == opt.format);
      });
      model = fit(train, ResponseTensor{}, cfg);
      ++out.fits;
      out.fits_out_of_bounds += !model->within_bounds();
      CatOptions cat;
      cat.criterion = method_criterion(method);
      cat.format = opt.format;
      cat.ability = opt.ability;
      auto session = run_cat_session(*model, tensor_responder(t, subject), pool, max_budget, cat);
      if (session.error) throw ValidationError(*session.error);
      for (const auto& s : session.steps) {
        order.push_back(pool_index.at(s.item));
        thetas.push_back(s.theta_hat);
      }
    }

    std::vector<double> rho, gam;
    for (double f : opt.fractions) {
      const std::size_t k = subset_budget(f, n);
      std::vector<std::string> subset;
      std::vector<char> in_subset(n, 0);
      long observed = 0;
      for (std::size_t s = 0; s < k; ++s) {
        subset.push_back(pool[order[s]]);
        in_subset[order[s]] = 1;
        observed += outcome[order[s]];
      }
      double estimate;
      if (method == Method::Random || opt.estimator == AccuracyEstimator::Subset) {
        estimate = double(observed) / double(k);
      } else if (opt.estimator == AccuracyEstimator::Model) {
        estimate = estimated_accuracy(*model, thetas[k - 1], pool, opt.format);
      } else {
        double imputed = 0;
        for (std::size_t j = 0; j < n; ++j) {
          if (!in_subset[j]) imputed += model->prob(thetas[k - 1], model->item_slot(pool[j], opt.format), opt.format);
        }
        estimate = (double(observed) + imputed) / double(n);
      }
      std::vector<double> est(truth.begin(), truth.end());
      est[held] = estimate;
      rho.push_back(spearman(truth, est));
      gam.push_back(contamination_gamma(subset, labels));
    }
    out.spearman.push_back(std::move(rho));
    out.gamma.push_back(std::move(gam));
  }
  return out;
}

}  // namespace detail

// For each replica one subject is held out: every model method is fit on the
// remaining subjects, a subset is selected adaptively against the held-out
// subject's recorded responses, and its full-pool accuracy is estimated. The
// estimate replaces its true accuracy among the others' true accuracies and
// the resulting ranking is compared with the true one.
inline RankingReport ranking_experiment(const ResponseTensor& t, const LabelMap& labels, const RankingOptions& opt) {
  if (t.subjects().size() < 3) throw ValidationError("ranking_experiment: need at least 3 subjects");
  if (opt.replicas == 0) throw ValidationError("ranking_experiment: replicas must be positive");
  if (opt.methods.empty() || opt.fractions.empty()) throw ValidationError("ranking_experiment: no methods or fractions");
  for (double f : opt.fractions)
    if (!(f > 0 && f <= 1)) throw ValidationError("ranking_experiment: fractions must be in (0, 1]");
  for (const auto& item : t.items())
    if (!labels.count(item)) throw ValidationError("ranking_experiment: item '" + item + "' has no label");

  // True ranking: accuracy on every item of the pool in the evaluation format.
  const auto summary = summarize(t, opt.format);
  std::vector<double> truth(t.subjects().size(), 0.0);
  if (summary.subjects.size() != truth.size()) throw ValidationError("ranking_experiment: a subject has no responses");
  for (const auto& row : summary.subjects) truth[*t.subject_index(row.id)] = row.accuracy();

  std::vector<std::size_t> held(t.subjects().size());
  for (std::size_t i = 0; i < held.size(); ++i) held[i] = i;
  Rng rng(derive_seed(opt.seed, {0x401d}));
  rng.shuffle(held);
  const std::size_t replicas = std::min(opt.replicas, held.size());

  std::vector<detail::ReplicaOutcome> outcomes(replicas);
  parallel_for(replicas, opt.jobs, [&](std::size_t r) {
    outcomes[r] = detail::run_ranking_replica(t, labels, opt, r, held[r], truth);
  });

  RankingReport report;
  report.fractions = opt.fractions;
  report.methods = opt.methods;
  report.replicas = replicas;
  for (std::size_t r = 0; r < replicas; ++r) {
    report.held_out.push_back(t.subjects()[held[r]]);
    report.fits += outcomes[r].fits;
    report.fits_out_of_bounds += outcomes[r].fits_out_of_bounds;
  }
  for (std::size_t mi = 0; mi < opt.methods.size(); ++mi) {
    for (std::size_t fi = 0; fi < opt.fractions.size(); ++fi) {
      MethodFractionStats row;
      row.method = opt.methods[mi];
      row.fraction = opt.fractions[fi];
      for (const auto& o : outcomes) {
        row.spearman_values.push_back(o.spearman[mi][fi]);
        row.gamma_values.push_back(o.gamma[mi][fi]);
      }
      row.spearman = mean_std(row.spearman_values);
      row.gamma = mean_std(row.gamma_values);
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Held-out prediction

struct HeldoutResult {
  double auc = 0;
  bool within_bounds = true;
};

// Fits on the cells left after masking and scores the masked test cells.
inline HeldoutResult heldout_auc(const ResponseTensor& t, const FitConfig& cfg, double val_fraction,
                                 double test_fraction, std::uint64_t seed, std::span<const double> q_grid = {}) {
  auto parts = mask_cells(t, val_fraction, test_fraction, seed);
  FittedModel model = q_grid.empty() ? fit(parts.train, parts.val, cfg)
                                     : grid_search_q(parts.train, parts.val, cfg, q_grid).model;
  auto auc = auc_on(model, parts.test);
  if (!auc) throw ValidationError("heldout_auc: test cells need both outcomes");
  return {*auc, model.within_bounds()};
}

struct PredictionOptions {
  Family family = Family::M3IRT;
  std::vector<double> levels{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  std::size_t replicas = 10;
  std::uint64_t seed = 0;
  FitConfig fit;  // family overridden by `family`
  std::vector<double> q_grid;  // empty: fit with fit.q
  LowQualityMix mix;
  GroundTruthOptions gt_options;
  std::vector<FormatIndicator> formats{kAllFormats.begin(), kAllFormats.end()};
  double density = 1.0;
  double val_fraction = 0.1;
  double test_fraction = 0.1;
  std::size_t jobs = 1;
};

struct PredictionRow {
  double level = 0;
  MeanStd auc;
  std::vector<double> values;
  std::size_t fits_out_of_bounds = 0;
};

// Per contamination level and replica: inject low-quality items into the
// clean ground truth, sample responses, mask validation/test cells, fit and
// score the test cells by ROC-AUC.
inline std::vector<PredictionRow> prediction_experiment(const GroundTruth& clean, const PredictionOptions& opt) {
  if (opt.replicas == 0) throw ValidationError("prediction_experiment: replicas must be positive");
  if (opt.levels.empty()) throw ValidationError("prediction_experiment: no contamination levels");
  const std::size_t L = opt.levels.size();
  std::vector<HeldoutResult> results(L * opt.replicas);
  parallel_for(results.size(), opt.jobs, [&](std::size_t k) {
    const std::size_t li = k / opt.replicas, r = k % opt.replicas;
    const auto s = derive_seed(opt.seed, {li, r});
    auto gt = inject_low_quality(clean, opt.levels[li], opt.mix, derive_seed(s, {1}), opt.gt_options);
    auto tensor = sample_responses(gt, opt.formats, opt.density, derive_seed(s, {2}));
    FitConfig cfg = opt.fit;
    cfg.family = opt.family;
    cfg.seed = derive_seed(s, {3});
    results[k] = heldout_auc(tensor, cfg, opt.val_fraction, opt.test_fraction, derive_seed(s, {4}), opt.q_grid);
  });
  std::vector<PredictionRow> rows;
  for (std::size_t li = 0; li < L; ++li) {
    PredictionRow row;
    row.level = opt.levels[li];
    for (std::size_t r = 0; r < opt.replicas; ++r) {
      const auto& res = results[li * opt.replicas + r];
      row.values.push_back(res.auc);
      row.fits_out_of_bounds += !res.within_bounds;
    }
    row.auc = mean_std(row.values);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace mmirt
