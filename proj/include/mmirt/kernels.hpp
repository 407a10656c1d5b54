#pragma once

// Response-probability kernels for 2PL IRT, MIRT and the two multimodal
// families, plus the additive composition of ability, difficulty and
// discrimination from their base/image/text/cross components.

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <span>
#include <string>
#include <string_view>

#include "mmirt/error.hpp"
#include "mmirt/format.hpp"

namespace mmirt {

// Component order of every 4-vector: base, image, text, cross.
using Vec4 = std::array<double, 4>;

enum Component : int { kBase = 0, kImage = 1, kText = 2, kCross = 3 };

struct SubjectParams {
  Vec4 theta{};
  friend bool operator==(const SubjectParams&, const SubjectParams&) = default;
};

struct ItemParams {
  Vec4 a{};  // discrimination components
  Vec4 b{};  // difficulty components
  friend bool operator==(const ItemParams&, const ItemParams&) = default;
};

// How the signed format vector enters the ability term of the multimodal
// multidimensional model. AsWritten applies the signed vector to both the
// ability and the difficulty term; Corrected uses its absolute value for the
// ability term so that modality abilities add to the logit.
enum class SignConvention { AsWritten, Corrected };

inline std::string_view to_string(SignConvention c) { return c == SignConvention::Corrected ? "corrected" : "as_written"; }

inline SignConvention parse_convention(std::string_view s) {
  if (s == "corrected") return SignConvention::Corrected;
  if (s == "as_written") return SignConvention::AsWritten;
  throw ValidationError("unknown sign convention '" + std::string(s) + "'");
}

inline constexpr double kLogitClamp = 30.0;

constexpr double clamp_logit(double z) noexcept { return std::clamp(z, -kLogitClamp, kLogitClamp); }

// Branch-stable logistic function.
inline double sigmoid(double z) noexcept {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// -log sigmoid(z) and -log(1 - sigmoid(z)) without cancellation.
inline double neg_log_sigmoid(double z) noexcept { return std::log1p(std::exp(-std::abs(z))) + std::max(-z, 0.0); }

// Negative log-likelihood of one Bernoulli outcome at (clamped) logit z.
inline double bernoulli_nll(double z, int correct) noexcept {
  z = clamp_logit(z);
  return correct ? neg_log_sigmoid(z) : neg_log_sigmoid(-z);
}

inline double dot4(const Vec4& x, const Vec4& y) noexcept { return x[0] * y[0] + x[1] * y[1] + x[2] * y[2] + x[3] * y[3]; }

// theta_base + s_image theta_image + s_text theta_text + s_image s_text theta_cross
inline double ability_at(const SubjectParams& sp, FormatIndicator s) noexcept {
  return dot4(sp.theta, s.unsigned_vector());
}

// b_base - s_image b_image - s_text b_text - s_image s_text b_cross
inline double difficulty_at(const ItemParams& ip, FormatIndicator s) noexcept { return dot4(ip.b, s.signed_vector()); }

// a_base + s_image a_image + s_text a_text + s_image s_text a_cross; in [0, 4q].
inline double discrimination_at(const ItemParams& ip, FormatIndicator s) noexcept {
  return dot4(ip.a, s.unsigned_vector());
}

// ---------------------------------------------------------------------------
// Logits

inline double logit_irt(double theta, double a, double b) noexcept { return a * (theta - b); }

inline double logit_mirt(std::span<const double> theta, std::span<const double> a, double b) {
  if (theta.size() != a.size()) throw ValidationError("MIRT ability and discrimination dimensions differ");
  double z = -b;
  for (std::size_t k = 0; k < theta.size(); ++k) z += a[k] * theta[k];
  return z;
}

inline double logit_m2(const SubjectParams& sp, const ItemParams& ip, FormatIndicator s) noexcept {
  return discrimination_at(ip, s) * (ability_at(sp, s) - difficulty_at(ip, s));
}

// Per-component weights on a_k * theta_k in the multidimensional multimodal logit.
inline Vec4 ability_weights(FormatIndicator s, SignConvention conv) noexcept {
  return conv == SignConvention::Corrected ? s.unsigned_vector() : s.signed_vector();
}

inline double logit_m3(const SubjectParams& sp, const ItemParams& ip, FormatIndicator s, SignConvention conv) noexcept {
  const Vec4 w = ability_weights(s, conv);
  double z = 0;
  for (int k = 0; k < 4; ++k) z += ip.a[k] * w[k] * sp.theta[k];
  return z - dot4(s.signed_vector(), ip.b);
}

// ---------------------------------------------------------------------------
// Probabilities (logit clamped to [-30, 30], so results lie in (0, 1))

inline double prob_irt(double theta, double a, double b) {
  if (!(a > 0)) throw ValidationError("IRT discrimination must be positive");
  return sigmoid(clamp_logit(logit_irt(theta, a, b)));
}

inline double prob_mirt(std::span<const double> theta, std::span<const double> a, double b) {
  return sigmoid(clamp_logit(logit_mirt(theta, a, b)));
}

inline double prob_m2(const SubjectParams& sp, const ItemParams& ip, FormatIndicator s) noexcept {
  return sigmoid(clamp_logit(logit_m2(sp, ip, s)));
}

inline double prob_m3(const SubjectParams& sp, const ItemParams& ip, FormatIndicator s,
                      SignConvention conv = SignConvention::Corrected) noexcept {
  return sigmoid(clamp_logit(logit_m3(sp, ip, s, conv)));
}

}  // namespace mmirt
