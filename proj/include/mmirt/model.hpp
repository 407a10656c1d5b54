#pragma once

// Model families, fit configuration and the fitted parameter container.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "mmirt/error.hpp"
#include "mmirt/format.hpp"
#include "mmirt/kernels.hpp"

namespace mmirt {

enum class Family { IRT, MIRT, M2IRT, M3IRT };

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::IRT: return "irt";
    case Family::MIRT: return "mirt";
    case Family::M2IRT: return "m2irt";
    case Family::M3IRT: return "m3irt";
  }
  return "m3irt";
}

inline Family parse_family(std::string_view s) {
  if (s == "irt") return Family::IRT;
  if (s == "mirt") return Family::MIRT;
  if (s == "m2irt") return Family::M2IRT;
  if (s == "m3irt") return Family::M3IRT;
  throw ValidationError("unknown model family '" + std::string(s) + "'");
}

// Classic families know nothing about formats: each (item, format) pair they
// see is modeled as a separate item.
constexpr bool is_classic(Family f) noexcept { return f == Family::IRT || f == Family::MIRT; }

inline std::string classic_item_key(const std::string& item, FormatIndicator s) { return item + "@" + s.str(); }

inline constexpr double kMinDiscrimination = 1e-4;

struct FitConfig {
  Family family = Family::M3IRT;
  int mirt_dim = 4;
  double q = 4.0;
  SignConvention convention = SignConvention::Corrected;
  double learning_rate = 0.01;
  std::size_t batch_size = 1024;
  int max_epochs = 200;
  int patience = 20;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const {
    if (!(q > 0)) throw ValidationError("q must be positive");
    if (!(learning_rate > 0)) throw ValidationError("learning rate must be positive");
    if (batch_size < 1) throw ValidationError("batch size must be at least 1");
    if (max_epochs < 1) throw ValidationError("max_epochs must be at least 1");
    if (patience < 0) throw ValidationError("patience must be non-negative");
    if (family == Family::MIRT && mirt_dim < 1) throw ValidationError("MIRT dimension must be at least 1");
  }
};

// Per-subject ability and per-item discrimination/difficulty widths.
struct ParamShape {
  std::size_t ability;
  std::size_t discrimination;
  std::size_t difficulty;
};

constexpr ParamShape param_shape(Family f, int mirt_dim) noexcept {
  switch (f) {
    case Family::IRT: return {1, 1, 1};
    case Family::MIRT: return {std::size_t(mirt_dim), std::size_t(mirt_dim), 1};
    default: return {4, 4, 4};
  }
}

// Flat row-major parameter arrays; the same layout holds gradients and
// optimizer moments.
struct ParamSet {
  std::vector<double> theta;
  std::vector<double> a;
  std::vector<double> b;

  friend bool operator==(const ParamSet&, const ParamSet&) = default;

  void fill(double v) {
    std::fill(theta.begin(), theta.end(), v);
    std::fill(a.begin(), a.end(), v);
    std::fill(b.begin(), b.end(), v);
  }
};

// Logit of any family from raw parameter rows.
inline double family_logit(Family f, SignConvention conv, std::span<const double> theta, std::span<const double> a,
                           std::span<const double> b, FormatIndicator s) {
  switch (f) {
    case Family::IRT: return logit_irt(theta[0], a[0], b[0]);
    case Family::MIRT: return logit_mirt(theta, a, b[0]);
    case Family::M2IRT:
    case Family::M3IRT: {
      SubjectParams sp{{theta[0], theta[1], theta[2], theta[3]}};
      ItemParams ip{{a[0], a[1], a[2], a[3]}, {b[0], b[1], b[2], b[3]}};
      return f == Family::M2IRT ? logit_m2(sp, ip, s) : logit_m3(sp, ip, s, conv);
    }
  }
  return 0;
}

// Adds coeff * dz/d(param) into the gradient rows. Null spans are skipped.
inline void family_logit_grad(Family f, SignConvention conv, std::span<const double> theta, std::span<const double> a,
                              std::span<const double> b, FormatIndicator s, double coeff, std::span<double> g_theta,
                              std::span<double> g_a, std::span<double> g_b) {
  switch (f) {
    case Family::IRT: {
      if (!g_theta.empty()) g_theta[0] += coeff * a[0];
      if (!g_a.empty()) g_a[0] += coeff * (theta[0] - b[0]);
      if (!g_b.empty()) g_b[0] -= coeff * a[0];
      return;
    }
    case Family::MIRT: {
      for (std::size_t k = 0; k < theta.size(); ++k) {
        if (!g_theta.empty()) g_theta[k] += coeff * a[k];
        if (!g_a.empty()) g_a[k] += coeff * theta[k];
      }
      if (!g_b.empty()) g_b[0] -= coeff;
      return;
    }
    case Family::M2IRT: {
      // z = A (T - B), A = u.a, T = u.theta, B = v.b
      const Vec4 u = s.unsigned_vector();
      const Vec4 v = s.signed_vector();
      double A = 0, T = 0, B = 0;
      for (int k = 0; k < 4; ++k) {
        A += u[k] * a[k];
        T += u[k] * theta[k];
        B += v[k] * b[k];
      }
      for (int k = 0; k < 4; ++k) {
        if (!g_theta.empty()) g_theta[k] += coeff * A * u[k];
        if (!g_a.empty()) g_a[k] += coeff * (T - B) * u[k];
        if (!g_b.empty()) g_b[k] -= coeff * A * v[k];
      }
      return;
    }
    case Family::M3IRT: {
      const Vec4 w = ability_weights(s, conv);
      const Vec4 v = s.signed_vector();
      for (int k = 0; k < 4; ++k) {
        if (!g_theta.empty()) g_theta[k] += coeff * a[k] * w[k];
        if (!g_a.empty()) g_a[k] += coeff * w[k] * theta[k];
        if (!g_b.empty()) g_b[k] -= coeff * v[k];
      }
      return;
    }
  }
}

namespace detail {
template <typename V>
auto row(V& v, std::size_t k, std::size_t width) {
  using T = std::remove_reference_t<decltype(v[0])>;
  return std::span<T>(v.data() + k * width, width);
}
}  // namespace detail

class FittedModel {
 public:
  FitConfig config;
  std::vector<std::string> subject_ids;
  std::vector<std::string> item_ids;  // composite item@format keys for classic families
  ParamSet params;
  std::optional<double> val_auc;
  double train_nll = 0;
  double initial_nll = 0;
  int epochs_run = 0;

  FittedModel() = default;

  FittedModel(FitConfig cfg, std::vector<std::string> subjects, std::vector<std::string> items)
      : config(cfg), subject_ids(std::move(subjects)), item_ids(std::move(items)) {
    const auto sh = shape();
    params.theta.assign(subject_ids.size() * sh.ability, 0.0);
    params.a.assign(item_ids.size() * sh.discrimination, 0.0);
    params.b.assign(item_ids.size() * sh.difficulty, 0.0);
    reindex();
  }

  ParamShape shape() const noexcept { return param_shape(config.family, config.mirt_dim); }
  Family family() const noexcept { return config.family; }
  double q() const noexcept { return config.q; }

  void reindex() {
    subject_index_.clear();
    item_index_.clear();
    for (std::size_t k = 0; k < subject_ids.size(); ++k) subject_index_.emplace(subject_ids[k], k);
    for (std::size_t k = 0; k < item_ids.size(); ++k) item_index_.emplace(item_ids[k], k);
  }

  std::optional<std::size_t> find_subject(const std::string& id) const {
    auto it = subject_index_.find(id);
    if (it == subject_index_.end()) return std::nullopt;
    return it->second;
  }

  // Row of the parameter arrays that models `item` shown in format `s`.
  std::optional<std::size_t> find_item(const std::string& item, FormatIndicator s) const {
    auto it = item_index_.find(is_classic(config.family) ? classic_item_key(item, s) : item);
    if (it == item_index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t subject_slot(const std::string& id) const {
    if (auto k = find_subject(id)) return *k;
    throw ValidationError("unknown subject '" + id + "'");
  }

  std::size_t item_slot(const std::string& item, FormatIndicator s) const {
    if (auto k = find_item(item, s)) return *k;
    throw ValidationError("unknown item '" + item + "' (format " + s.str() + ")");
  }

  std::span<const double> theta(std::size_t i) const { return detail::row(params.theta, i, shape().ability); }
  std::span<const double> a(std::size_t j) const { return detail::row(params.a, j, shape().discrimination); }
  std::span<const double> b(std::size_t j) const { return detail::row(params.b, j, shape().difficulty); }
  std::span<double> theta(std::size_t i) { return detail::row(params.theta, i, shape().ability); }
  std::span<double> a(std::size_t j) { return detail::row(params.a, j, shape().discrimination); }
  std::span<double> b(std::size_t j) { return detail::row(params.b, j, shape().difficulty); }

  // Multimodal views; only valid for the M2IRT/M3IRT families.
  SubjectParams subject_params(std::size_t i) const {
    auto t = theta(i);
    return {{t[0], t[1], t[2], t[3]}};
  }
  ItemParams item_params(std::size_t j) const {
    auto x = a(j);
    auto y = b(j);
    return {{x[0], x[1], x[2], x[3]}, {y[0], y[1], y[2], y[3]}};
  }

  double logit(std::span<const double> ability, std::size_t j, FormatIndicator s) const {
    return family_logit(config.family, config.convention, ability, a(j), b(j), s);
  }
  double logit(std::size_t i, std::size_t j, FormatIndicator s) const { return logit(theta(i), j, s); }

  double prob(std::span<const double> ability, std::size_t j, FormatIndicator s) const {
    return sigmoid(clamp_logit(logit(ability, j, s)));
  }
  double prob(std::size_t i, std::size_t j, FormatIndicator s) const { return prob(theta(i), j, s); }

  // Lower bound on discrimination components.
  double discrimination_floor() const noexcept { return is_classic(config.family) ? kMinDiscrimination : 0.0; }

  // Clamp every component onto its box.
  void project() {
    const double q = config.q;
    for (auto& x : params.theta) x = std::clamp(x, 0.0, q);
    const double lo = discrimination_floor();
    for (auto& x : params.a) x = std::clamp(x, lo, q);
    for (auto& x : params.b) x = std::clamp(x, 0.0, q);
  }

  bool within_bounds() const {
    const double q = config.q;
    auto inside = [](const std::vector<double>& v, double lo, double hi) {
      return std::all_of(v.begin(), v.end(), [&](double x) { return x >= lo && x <= hi; });
    };
    return inside(params.theta, 0.0, q) && inside(params.a, discrimination_floor(), q) && inside(params.b, 0.0, q);
  }

 private:
  std::unordered_map<std::string, std::size_t> subject_index_;
  std::unordered_map<std::string, std::size_t> item_index_;
};

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::ordered_json to_json(const FittedModel& m) {
  nlohmann::ordered_json j;
  const auto& c = m.config;
  j["family"] = std::string(to_string(c.family));
  if (c.family == Family::MIRT) j["mirt_dim"] = c.mirt_dim;
  j["q"] = c.q;
  j["convention"] = std::string(to_string(c.convention));
  j["lr"] = c.learning_rate;
  j["seed"] = c.seed;
  j["batch_size"] = c.batch_size;
  j["max_epochs"] = c.max_epochs;
  j["patience"] = c.patience;
  j["adam"] = {c.beta1, c.beta2, c.epsilon};
  auto& subjects = j["subjects"] = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < m.subject_ids.size(); ++i) {
    auto t = m.theta(i);
    subjects[m.subject_ids[i]] = std::vector<double>(t.begin(), t.end());
  }
  auto& items = j["items"] = nlohmann::ordered_json::object();
  for (std::size_t k = 0; k < m.item_ids.size(); ++k) {
    auto a = m.a(k);
    auto b = m.b(k);
    nlohmann::ordered_json it;
    it["a"] = std::vector<double>(a.begin(), a.end());
    it["b"] = std::vector<double>(b.begin(), b.end());
    items[m.item_ids[k]] = std::move(it);
  }
  j["val_auc"] = m.val_auc ? nlohmann::ordered_json(*m.val_auc) : nlohmann::ordered_json(nullptr);
  j["train_nll"] = m.train_nll;
  j["initial_nll"] = m.initial_nll;
  j["epochs_run"] = m.epochs_run;
  return j;
}

inline FittedModel model_from_json(const nlohmann::ordered_json& j) {
  try {
    FitConfig c;
    c.family = parse_family(j.at("family").get<std::string>());
    if (j.contains("mirt_dim")) c.mirt_dim = j["mirt_dim"].get<int>();
    c.q = j.at("q").get<double>();
    c.convention = parse_convention(j.value("convention", std::string("corrected")));
    c.learning_rate = j.value("lr", c.learning_rate);
    c.seed = j.value("seed", c.seed);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.patience = j.value("patience", c.patience);
    if (j.contains("adam")) {
      c.beta1 = j["adam"][0].get<double>();
      c.beta2 = j["adam"][1].get<double>();
      c.epsilon = j["adam"][2].get<double>();
    }
    std::vector<std::string> subjects, items;
    for (const auto& [id, _] : j.at("subjects").items()) subjects.push_back(id);
    for (const auto& [id, _] : j.at("items").items()) items.push_back(id);
    FittedModel m(c, subjects, items);
    auto copy = [](const nlohmann::ordered_json& src, std::span<double> dst, const std::string& what) {
      auto v = src.get<std::vector<double>>();
      if (v.size() != dst.size()) throw ValidationError(what + ": expected " + std::to_string(dst.size()) + " values");
      std::copy(v.begin(), v.end(), dst.begin());
    };
    std::size_t i = 0;
    for (const auto& [id, v] : j["subjects"].items()) copy(v, m.theta(i++), "subject " + id);
    std::size_t k = 0;
    for (const auto& [id, v] : j["items"].items()) {
      copy(v.at("a"), m.a(k), "item " + id + " a");
      copy(v.at("b"), m.b(k), "item " + id + " b");
      ++k;
    }
    if (j.contains("val_auc") && !j["val_auc"].is_null()) m.val_auc = j["val_auc"].get<double>();
    m.train_nll = j.value("train_nll", 0.0);
    m.initial_nll = j.value("initial_nll", 0.0);
    m.epochs_run = j.value("epochs_run", 0);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed model JSON: ") + e.what(), 0);
  }
}

inline void save_model(const std::string& path, const FittedModel& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << to_json(m).dump(2) << '\n';
}

inline FittedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid model JSON: ") + e.what(), 0);
  }
  return model_from_json(j);
}

}  // namespace mmirt
