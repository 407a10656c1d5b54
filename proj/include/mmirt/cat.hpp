#pragma once

// Computerized adaptive testing: Fisher information, greedy item selection
// (maximum information or D-optimality) and ability re-estimation.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mmirt/error.hpp"
#include "mmirt/kernels.hpp"
#include "mmirt/model.hpp"
#include "mmirt/rng.hpp"
#include "mmirt/tensor.hpp"

namespace mmirt {

// Dense symmetric d x d information matrix.
class InfoMatrix {
 public:
  InfoMatrix() = default;
  explicit InfoMatrix(std::size_t dim) : dim_(dim), v_(dim * dim, 0.0) {}

  static InfoMatrix scaled_identity(std::size_t dim, double eps) {
    InfoMatrix m(dim);
    for (std::size_t k = 0; k < dim; ++k) m(k, k) = eps;
    return m;
  }

  std::size_t dim() const noexcept { return dim_; }
  double& operator()(std::size_t i, std::size_t j) { return v_[i * dim_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return v_[i * dim_ + j]; }
  std::span<const double> data() const noexcept { return v_; }

  // this += w g g^T
  InfoMatrix& add_outer(double w, std::span<const double> g) {
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = 0; j < dim_; ++j) v_[i * dim_ + j] += w * g[i] * g[j];
    return *this;
  }

  InfoMatrix& operator+=(const InfoMatrix& o) {
    for (std::size_t k = 0; k < v_.size(); ++k) v_[k] += o.v_[k];
    return *this;
  }

  double trace() const {
    double t = 0;
    for (std::size_t k = 0; k < dim_; ++k) t += (*this)(k, k);
    return t;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<double> v_;
};

// Determinant by LU decomposition with partial pivoting.
inline double determinant(const InfoMatrix& m) {
  const std::size_t n = m.dim();
  std::vector<double> a(m.data().begin(), m.data().end());
  double det = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r * n + c]) > std::abs(a[p * n + c])) p = r;
    if (a[p * n + c] == 0.0) return 0.0;
    if (p != c) {
      for (std::size_t k = 0; k < n; ++k) std::swap(a[p * n + k], a[c * n + k]);
      det = -det;
    }
    const double piv = a[c * n + c];
    det *= piv;
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r * n + c] / piv;
      if (f == 0.0) continue;
      for (std::size_t k = c; k < n; ++k) a[r * n + k] -= f * a[c * n + k];
    }
  }
  return det;
}

// ---------------------------------------------------------------------------
// Information of a single item

// M2IRT scalar information P(1-P) a(s)^2.
inline double fisher_scalar(const SubjectParams& sp, const ItemParams& ip, FormatIndicator s) {
  const double p = prob_m2(sp, ip, s);
  const double a = discrimination_at(ip, s);
  return p * (1 - p) * a * a;
}

// M3IRT information matrix P(1-P) (W a)(W a)^T with W = diag(|s|) under the
// corrected convention and diag(s) as written.
inline InfoMatrix fisher_matrix(const SubjectParams& sp, const ItemParams& ip, FormatIndicator s,
                                SignConvention conv) {
  const double p = prob_m3(sp, ip, s, conv);
  const Vec4 w = ability_weights(s, conv);
  Vec4 g;
  for (int k = 0; k < 4; ++k) g[k] = w[k] * ip.a[k];
  InfoMatrix m(4);
  m.add_outer(p * (1 - p), g);
  return m;
}

// Gradient of the logit with respect to the ability vector.
inline std::vector<double> ability_gradient(const FittedModel& m, std::span<const double> theta, std::size_t item,
                                            FormatIndicator s) {
  std::vector<double> g(m.shape().ability, 0.0);
  family_logit_grad(m.family(), m.config.convention, theta, m.a(item), m.b(item), s, 1.0, g, {}, {});
  return g;
}

// Scalar information of any family: a^2 for IRT, a(s)^2 for M2IRT and the
// squared norm of the ability gradient (trace of the matrix) otherwise.
inline double fisher_scalar(const FittedModel& m, std::span<const double> theta, std::size_t item, FormatIndicator s) {
  const double p = m.prob(theta, item, s);
  double slope2;
  switch (m.family()) {
    case Family::IRT: slope2 = m.a(item)[0] * m.a(item)[0]; break;
    case Family::M2IRT: {
      const double a = discrimination_at(m.item_params(item), s);
      slope2 = a * a;
      break;
    }
    default: {
      slope2 = 0;
      for (double g : ability_gradient(m, theta, item, s)) slope2 += g * g;
    }
  }
  return p * (1 - p) * slope2;
}

// Information matrix P(1-P) g g^T with g the ability gradient of the logit.
inline InfoMatrix fisher_matrix(const FittedModel& m, std::span<const double> theta, std::size_t item,
                                FormatIndicator s) {
  const double p = m.prob(theta, item, s);
  InfoMatrix out(m.shape().ability);
  out.add_outer(p * (1 - p), ability_gradient(m, theta, item, s));
  return out;
}

// ---------------------------------------------------------------------------
// Greedy selection

namespace detail {

inline std::vector<std::size_t> resolve_pool(const FittedModel& m, std::span<const std::string> pool, FormatIndicator s) {
  std::vector<std::size_t> slots;
  slots.reserve(pool.size());
  for (const auto& id : pool) slots.push_back(m.item_slot(id, s));
  return slots;
}

// Larger score wins; equal scores go to the smaller item id.
inline bool better(double score, const std::string& id, double best_score, const std::string* best_id) {
  return best_id == nullptr || score > best_score || (score == best_score && id < *best_id);
}

}  // namespace detail

inline std::string select_next_maxinfo(const FittedModel& m, std::span<const double> theta,
                                       std::span<const std::string> pool, FormatIndicator s = kFullFormat) {
  if (pool.empty()) throw ValidationError("select_next_maxinfo: empty pool");
  const auto slots = detail::resolve_pool(m, pool, s);
  const std::string* best_id = nullptr;
  double best = 0;
  for (std::size_t k = 0; k < pool.size(); ++k) {
    const double info = fisher_scalar(m, theta, slots[k], s);
    if (detail::better(info, pool[k], best, best_id)) {
      best = info;
      best_id = &pool[k];
    }
  }
  return *best_id;
}

struct DOptimalChoice {
  std::string item;
  InfoMatrix cum_info;
  double det = 0;
};

// argmax_j det(cum_info + I_j) and the updated cumulative matrix.
inline DOptimalChoice select_next_doptimal(const FittedModel& m, const InfoMatrix& cum_info,
                                           std::span<const double> theta, std::span<const std::string> pool,
                                           FormatIndicator s = kFullFormat) {
  if (pool.empty()) throw ValidationError("select_next_doptimal: empty pool");
  if (cum_info.dim() != m.shape().ability) throw ValidationError("select_next_doptimal: information matrix dimension");
  const auto slots = detail::resolve_pool(m, pool, s);
  const std::string* best_id = nullptr;
  double best = 0;
  std::size_t best_k = 0;
  for (std::size_t k = 0; k < pool.size(); ++k) {
    InfoMatrix cand = cum_info;
    cand += fisher_matrix(m, theta, slots[k], s);
    const double d = determinant(cand);
    if (detail::better(d, pool[k], best, best_id)) {
      best = d;
      best_id = &pool[k];
      best_k = k;
    }
  }
  InfoMatrix updated = cum_info;
  updated += fisher_matrix(m, theta, slots[best_k], s);
  return {*best_id, std::move(updated), best};
}

// ---------------------------------------------------------------------------
// Ability estimation

struct Answer {
  std::string item;
  FormatIndicator format;
  int correct = 0;
};

struct AbilityOptions {
  double ridge = 0.01;
  double learning_rate = 0.01;
  int max_steps = 500;
  double grad_tol = 1e-6;
};

inline std::vector<double> ability_midpoint(const FittedModel& m) {
  return std::vector<double>(m.shape().ability, m.q() / 2);
}

// Penalized maximum likelihood with item parameters frozen:
//   max sum log p(r | theta) - ridge ||theta - theta_mid||^2 over [0, q]^d,
// by projected Adam ascent. `init` defaults to theta_mid.
inline std::vector<double> estimate_ability(const FittedModel& m, std::span<const Answer> answered,
                                            const AbilityOptions& opt = {},
                                            std::optional<std::vector<double>> init = std::nullopt) {
  const auto mid = ability_midpoint(m);
  if (answered.empty()) return mid;
  const double q = m.q();
  const std::size_t d = mid.size();
  std::vector<std::size_t> slots;
  slots.reserve(answered.size());
  for (const auto& ans : answered) slots.push_back(m.item_slot(ans.item, ans.format));

  std::vector<double> theta = init ? *init : mid;
  if (theta.size() != d) throw ValidationError("estimate_ability: initial ability has the wrong dimension");
  for (auto& x : theta) x = std::clamp(x, 0.0, q);
  std::vector<double> g(d), m1(d, 0.0), m2(d, 0.0);
  const double b1 = m.config.beta1, b2 = m.config.beta2, eps = m.config.epsilon;
  for (int step = 1; step <= opt.max_steps; ++step) {
    // g = d(-objective)/d theta
    for (std::size_t k = 0; k < d; ++k) g[k] = 2 * opt.ridge * (theta[k] - mid[k]);
    for (std::size_t n = 0; n < slots.size(); ++n) {
      const double z = m.logit(theta, slots[n], answered[n].format);
      const double resid = sigmoid(clamp_logit(z)) - double(answered[n].correct);
      family_logit_grad(m.family(), m.config.convention, theta, m.a(slots[n]), m.b(slots[n]), answered[n].format,
                        resid, g, {}, {});
    }
    double pg = 0;
    for (std::size_t k = 0; k < d; ++k) {
      const bool pinned = (theta[k] <= 0 && g[k] > 0) || (theta[k] >= q && g[k] < 0);
      if (!pinned) pg += g[k] * g[k];
    }
    if (std::sqrt(pg) < opt.grad_tol) break;
    const double c1 = 1 - std::pow(b1, step), c2 = 1 - std::pow(b2, step);
    for (std::size_t k = 0; k < d; ++k) {
      m1[k] = b1 * m1[k] + (1 - b1) * g[k];
      m2[k] = b2 * m2[k] + (1 - b2) * g[k] * g[k];
      theta[k] = std::clamp(theta[k] - opt.learning_rate * (m1[k] / c1) / (std::sqrt(m2[k] / c2) + eps), 0.0, q);
    }
  }
  return theta;
}

// ---------------------------------------------------------------------------
// Sessions

enum class Criterion { MaxInfo, DOptimal };

inline std::string_view to_string(Criterion c) { return c == Criterion::MaxInfo ? "maxinfo" : "doptimal"; }

inline Criterion parse_criterion(std::string_view s) {
  if (s == "maxinfo") return Criterion::MaxInfo;
  if (s == "doptimal") return Criterion::DOptimal;
  throw ValidationError("unknown criterion '" + std::string(s) + "' (expected maxinfo or doptimal)");
}

struct CatOptions {
  Criterion criterion = Criterion::DOptimal;
  FormatIndicator format = kFullFormat;
  double epsilon = 1e-6;  // initial cumulative information eps * I
  AbilityOptions ability;
  std::optional<std::uint64_t> random_init_seed;  // random instead of midpoint start
};

struct SessionStep {
  std::string item;
  FormatIndicator format;
  int correct = 0;
  double info = 0;  // det of the cumulative matrix (D-optimal) or the cumulative scalar (max-info)
  std::vector<double> theta_hat;
};

struct CatSession {
  Criterion criterion = Criterion::DOptimal;
  std::size_t budget = 0;
  std::vector<SessionStep> steps;
  std::vector<double> theta_hat;
  InfoMatrix cum_info;
  double cum_info_scalar = 0;
  std::optional<std::string> error;  // set when the responder failed; steps hold the partial session

  std::vector<std::string> subset() const {
    std::vector<std::string> out;
    out.reserve(steps.size());
    for (const auto& s : steps) out.push_back(s.item);
    return out;
  }

  std::vector<Answer> answers() const {
    std::vector<Answer> out;
    out.reserve(steps.size());
    for (const auto& s : steps) out.push_back({s.item, s.format, s.correct});
    return out;
  }
};

// Returns 0/1 for an item shown in a format; throws on failure.
using Responder = std::function<int(const std::string& item, FormatIndicator s)>;

// Replays a subject's recorded responses.
inline Responder tensor_responder(const ResponseTensor& t, std::string subject) {
  return [&t, subject = std::move(subject)](const std::string& item, FormatIndicator s) {
    auto r = t.lookup(subject, item, s);
    if (!r) throw ValidationError("no recorded response for (" + subject + ", " + item + ", " + s.str() + ")");
    return *r;
  };
}

// Select, query, record, re-estimate; repeated `budget` times.
inline CatSession run_cat_session(const FittedModel& m, const Responder& responder, std::span<const std::string> pool,
                                  std::size_t budget, const CatOptions& opt = {}) {
  if (budget > pool.size()) throw ValidationError("budget exceeds the pool size");
  const std::size_t d = m.shape().ability;
  CatSession session;
  session.criterion = opt.criterion;
  session.budget = budget;
  session.theta_hat = ability_midpoint(m);
  if (opt.random_init_seed) {
    Rng rng(*opt.random_init_seed);
    for (auto& x : session.theta_hat) x = rng.uniform(0.0, m.q());
  }
  session.cum_info = InfoMatrix::scaled_identity(d, opt.epsilon);
  session.cum_info_scalar = opt.epsilon;

  std::vector<std::string> remaining(pool.begin(), pool.end());
  std::vector<std::size_t> slots = detail::resolve_pool(m, remaining, opt.format);
  std::vector<Answer> answered;
  for (std::size_t t = 0; t < budget; ++t) {
    // Scan once per step over the remaining pool.
    std::size_t best_k = 0;
    const std::string* best_id = nullptr;
    double best = 0;
    for (std::size_t k = 0; k < remaining.size(); ++k) {
      double score;
      if (opt.criterion == Criterion::MaxInfo) {
        score = fisher_scalar(m, session.theta_hat, slots[k], opt.format);
      } else {
        InfoMatrix cand = session.cum_info;
        cand += fisher_matrix(m, session.theta_hat, slots[k], opt.format);
        score = determinant(cand);
      }
      if (detail::better(score, remaining[k], best, best_id)) {
        best = score;
        best_id = &remaining[k];
        best_k = k;
      }
    }
    const std::string item = remaining[best_k];
    const std::size_t slot = slots[best_k];
    int correct;
    try {
      correct = responder(item, opt.format);
    } catch (const std::exception& e) {
      session.error = e.what();
      return session;
    }
    if (correct != 0 && correct != 1) {
      session.error = "responder returned a non-binary outcome for '" + item + "'";
      return session;
    }
    session.cum_info += fisher_matrix(m, session.theta_hat, slot, opt.format);
    session.cum_info_scalar += fisher_scalar(m, session.theta_hat, slot, opt.format);
    remaining.erase(remaining.begin() + std::ptrdiff_t(best_k));
    slots.erase(slots.begin() + std::ptrdiff_t(best_k));

    answered.push_back({item, opt.format, correct});
    session.theta_hat = estimate_ability(m, answered, opt.ability, session.theta_hat);
    const double info =
        opt.criterion == Criterion::DOptimal ? determinant(session.cum_info) : session.cum_info_scalar;
    session.steps.push_back({item, opt.format, correct, info, session.theta_hat});
  }
  return session;
}

// One JSON object per step.
inline void write_session_log(std::ostream& out, const CatSession& session) {
  const char* info_key = session.criterion == Criterion::DOptimal ? "det_cum_info" : "cum_info";
  for (std::size_t t = 0; t < session.steps.size(); ++t) {
    const auto& s = session.steps[t];
    nlohmann::ordered_json j;
    j["step"] = t + 1;
    j["item"] = s.item;
    j["s_image"] = s.format.image;
    j["s_text"] = s.format.text;
    j["correct"] = s.correct;
    j[info_key] = s.info;
    j["theta_hat"] = s.theta_hat;
    out << j.dump() << '\n';
  }
}

}  // namespace mmirt
