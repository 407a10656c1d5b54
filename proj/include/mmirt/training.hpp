#pragma once

// Maximum-likelihood fitting with mini-batch Adam and box projection.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mmirt/error.hpp"
#include "mmirt/metrics.hpp"
#include "mmirt/model.hpp"
#include "mmirt/parallel.hpp"
#include "mmirt/rng.hpp"
#include "mmirt/tensor.hpp"

namespace mmirt {

// A response cell resolved to parameter rows.
struct IndexedCell {
  std::uint32_t subject;
  std::uint32_t item;
  FormatIndicator format;
  int correct;
};

inline std::vector<IndexedCell> index_records(const FittedModel& m, std::span<const ResponseRecord> records) {
  std::vector<IndexedCell> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    out.push_back({static_cast<std::uint32_t>(m.subject_slot(r.subject)),
                   static_cast<std::uint32_t>(m.item_slot(r.item, r.format)), r.format, r.correct});
  }
  return out;
}

inline double nll(const FittedModel& m, std::span<const IndexedCell> cells) {
  double total = 0;
  for (const auto& c : cells) total += bernoulli_nll(m.logit(c.subject, c.item, c.format), c.correct);
  return total;
}

// Negative log-likelihood of a batch; 0 for an empty batch.
inline double nll(const FittedModel& m, std::span<const ResponseRecord> batch) {
  return nll(m, index_records(m, batch));
}

inline ParamSet zero_like(const ParamSet& p) {
  return {std::vector<double>(p.theta.size(), 0.0), std::vector<double>(p.a.size(), 0.0),
          std::vector<double>(p.b.size(), 0.0)};
}

// Accumulates d nll / d params into `g`. Inside the logit clamp this is the
// exact gradient; outside it the residual of the clamped probability is used
// so that saturated wrong predictions still move.
inline void accumulate_grad(const FittedModel& m, std::span<const IndexedCell> cells, ParamSet& g) {
  const auto sh = m.shape();
  for (const auto& c : cells) {
    const double z = m.logit(c.subject, c.item, c.format);
    const double resid = sigmoid(clamp_logit(z)) - double(c.correct);
    family_logit_grad(m.family(), m.config.convention, m.theta(c.subject), m.a(c.item), m.b(c.item), c.format, resid,
                      std::span<double>(g.theta.data() + c.subject * sh.ability, sh.ability),
                      std::span<double>(g.a.data() + c.item * sh.discrimination, sh.discrimination),
                      std::span<double>(g.b.data() + c.item * sh.difficulty, sh.difficulty));
  }
}

// Gradient of nll over the batch, mirroring the parameter layout. Parameters
// not touched by the batch get exactly zero.
inline ParamSet grad_nll(const FittedModel& m, std::span<const ResponseRecord> batch) {
  ParamSet g = zero_like(m.params);
  accumulate_grad(m, index_records(m, batch), g);
  return g;
}

struct Cell {
  std::string subject;
  std::string item;
  FormatIndicator format;
};

// Success probabilities for each cell, in order.
inline std::vector<double> predict(const FittedModel& m, std::span<const Cell> cells) {
  std::vector<double> out;
  out.reserve(cells.size());
  for (const auto& c : cells) out.push_back(m.prob(m.subject_slot(c.subject), m.item_slot(c.item, c.format), c.format));
  return out;
}

inline std::vector<double> predict(const FittedModel& m, const ResponseTensor& t) {
  std::vector<double> out;
  out.reserve(t.size());
  for (const auto& r : t.records()) out.push_back(m.prob(m.subject_slot(r.subject), m.item_slot(r.item, r.format), r.format));
  return out;
}

inline std::optional<double> auc_on(const FittedModel& m, const ResponseTensor& t) {
  if (t.empty()) return std::nullopt;
  std::vector<int> labels;
  labels.reserve(t.size());
  for (const auto& r : t.records()) labels.push_back(r.correct);
  const auto pos = std::count(labels.begin(), labels.end(), 1);
  if (pos == 0 || pos == std::ptrdiff_t(labels.size())) return std::nullopt;
  auto scores = predict(m, t);
  return roc_auc(scores, labels);
}

// Empty model over the training tensor's index lists. Classic families get
// one item row per (item, format) pair seen in training.
inline FittedModel make_model(const ResponseTensor& train, const FitConfig& cfg) {
  std::vector<std::string> items;
  if (is_classic(cfg.family)) {
    std::unordered_map<std::string, bool> seen;
    for (const auto& r : train.records()) {
      auto key = classic_item_key(r.item, r.format);
      if (seen.emplace(key, true).second) items.push_back(std::move(key));
    }
  } else {
    items = train.items();
  }
  return FittedModel(cfg, train.subjects(), std::move(items));
}

// Uniform [0, min(1, q)] initialization followed by projection.
inline void initialize(FittedModel& m, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0x1417}));
  const double hi = std::min(1.0, m.q());
  for (auto& x : m.params.theta) x = rng.uniform(0.0, hi);
  for (auto& x : m.params.a) x = rng.uniform(0.0, hi);
  for (auto& x : m.params.b) x = rng.uniform(0.0, hi);
  m.project();
}

namespace detail {

struct AdamState {
  ParamSet m1, m2;
  std::uint64_t step = 0;
};

inline void adam_update(std::vector<double>& x, const std::vector<double>& g, std::vector<double>& m1,
                        std::vector<double>& m2, double lr, double b1, double b2, double eps, double c1, double c2) {
  for (std::size_t k = 0; k < x.size(); ++k) {
    m1[k] = b1 * m1[k] + (1 - b1) * g[k];
    m2[k] = b2 * m2[k] + (1 - b2) * g[k] * g[k];
    x[k] -= lr * (m1[k] / c1) / (std::sqrt(m2[k] / c2) + eps);
  }
}

inline void adam_step(FittedModel& m, const ParamSet& g, AdamState& st) {
  const auto& c = m.config;
  ++st.step;
  const double c1 = 1 - std::pow(c.beta1, double(st.step));
  const double c2 = 1 - std::pow(c.beta2, double(st.step));
  adam_update(m.params.theta, g.theta, st.m1.theta, st.m2.theta, c.learning_rate, c.beta1, c.beta2, c.epsilon, c1, c2);
  adam_update(m.params.a, g.a, st.m1.a, st.m2.a, c.learning_rate, c.beta1, c.beta2, c.epsilon, c1, c2);
  adam_update(m.params.b, g.b, st.m1.b, st.m2.b, c.learning_rate, c.beta1, c.beta2, c.epsilon, c1, c2);
  m.project();
}

}  // namespace detail

// Fits `cfg.family` to the training tensor. Each epoch shuffles the records,
// takes one Adam step per mini-batch and projects all parameters back onto
// their boxes. With a non-empty validation tensor, training stops once the
// validation NLL has not improved for `patience` epochs and the best
// validation snapshot is returned; otherwise the final iterate is returned.
inline FittedModel fit(const ResponseTensor& train, const ResponseTensor& val, const FitConfig& cfg) {
  cfg.validate();
  if (train.empty()) throw ValidationError("fit: empty training tensor");
  FittedModel model = make_model(train, cfg);
  initialize(model, cfg.seed);

  const auto cells = index_records(model, train.records());
  const auto val_cells = index_records(model, val.records());
  model.initial_nll = nll(model, cells);

  detail::AdamState st{zero_like(model.params), zero_like(model.params), 0};
  ParamSet grad = zero_like(model.params);
  std::vector<std::size_t> order(cells.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::vector<IndexedCell> batch;
  batch.reserve(cfg.batch_size);

  Rng rng(derive_seed(cfg.seed, {0xe90c}));
  ParamSet best = model.params;
  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;
  int epoch = 0;
  while (epoch < cfg.max_epochs) {
    ++epoch;
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t k = start; k < stop; ++k) batch.push_back(cells[order[k]]);
      grad.fill(0.0);
      accumulate_grad(model, batch, grad);
      detail::adam_step(model, grad, st);
    }
    if (val_cells.empty()) continue;
    const double v = nll(model, val_cells);
    if (v < best_val) {
      best_val = v;
      best = model.params;
      since_best = 0;
    } else if (++since_best >= std::max(cfg.patience, 1)) {
      break;
    }
  }
  if (!val_cells.empty()) model.params = best;
  model.epochs_run = epoch;
  model.train_nll = nll(model, cells);
  model.val_auc = auc_on(model, val);
  return model;
}

struct GridRow {
  double q = 0;
  std::optional<double> val_auc;
  double train_nll = 0;
  int epochs_run = 0;
};

struct GridResult {
  FittedModel model;
  std::vector<GridRow> report;
};

// One fit per q; the highest validation AUC wins, ties go to the smaller q.
inline GridResult grid_search_q(const ResponseTensor& train, const ResponseTensor& val, const FitConfig& base,
                                std::span<const double> q_grid, std::size_t jobs = 1) {
  if (q_grid.empty()) throw ValidationError("grid_search_q: empty q grid");
  std::vector<std::optional<FittedModel>> fits(q_grid.size());
  parallel_for(q_grid.size(), jobs, [&](std::size_t k) {
    FitConfig cfg = base;
    cfg.q = q_grid[k];
    fits[k] = fit(train, val, cfg);
  });
  GridResult out;
  std::size_t best = 0;
  for (std::size_t k = 0; k < fits.size(); ++k) {
    const auto& m = *fits[k];
    out.report.push_back({q_grid[k], m.val_auc, m.train_nll, m.epochs_run});
    const double score = m.val_auc.value_or(-1.0);
    const double best_score = fits[best]->val_auc.value_or(-1.0);
    if (score > best_score || (score == best_score && q_grid[k] < q_grid[best])) best = k;
  }
  out.model = std::move(*fits[best]);
  return out;
}

}  // namespace mmirt
