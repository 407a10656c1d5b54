#pragma once

// Synthetic benchmarks: ground-truth parameters, low-quality item injection
// and Bernoulli response sampling.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmirt/error.hpp"
#include "mmirt/format.hpp"
#include "mmirt/kernels.hpp"
#include "mmirt/model.hpp"
#include "mmirt/rng.hpp"
#include "mmirt/tensor.hpp"

namespace mmirt {

// Sampling ranges, as fractions of q where noted.
struct GroundTruthOptions {
  double theta_hi = 0.5;          // theta ~ U[0, theta_hi q]
  double modality_b_hi = 0.1;     // b_image, b_text, b_cross ~ U[0, modality_b_hi q]
  double base_b_floor = 0.75;     // b_base ~ U[max(base_b_floor q, b_image, b_text), q]
  double a_lo = 0.2;              // a ~ U[a_lo, min(a_hi, q)]
  double a_hi = 1.0;
  Family family = Family::M3IRT;  // kernel that generates responses
  int n_choices = 4;

  // Full-range variant: theta, b ~ U[0, q], a ~ U[0.2, 1.5].
  static GroundTruthOptions wide() { return {1.0, 1.0, 0.0, 0.2, 1.5, Family::M3IRT, 4}; }
};

struct GroundTruth {
  std::vector<std::string> subject_ids;
  std::vector<SubjectParams> subjects;
  std::vector<std::string> item_ids;
  std::vector<ItemParams> items;
  LabelMap labels;
  double q = 4.0;
  SignConvention convention = SignConvention::Corrected;
  Family family = Family::M3IRT;
  int n_choices = 4;

  double prob(std::size_t i, std::size_t j, FormatIndicator s) const {
    return family == Family::M2IRT ? prob_m2(subjects[i], items[j], s) : prob_m3(subjects[i], items[j], s, convention);
  }

  double contamination() const {
    if (item_ids.empty()) return 0.0;
    std::size_t low = 0;
    for (const auto& id : item_ids) low += is_low_quality(labels.at(id));
    return double(low) / double(item_ids.size());
  }

  // The same parameters in the fitted-model container.
  FittedModel to_model() const {
    FitConfig cfg;
    cfg.family = family;
    cfg.q = q;
    cfg.convention = convention;
    FittedModel m(cfg, subject_ids, item_ids);
    for (std::size_t i = 0; i < subjects.size(); ++i) std::copy_n(subjects[i].theta.begin(), 4, m.theta(i).begin());
    for (std::size_t j = 0; j < items.size(); ++j) {
      std::copy_n(items[j].a.begin(), 4, m.a(j).begin());
      std::copy_n(items[j].b.begin(), 4, m.b(j).begin());
    }
    return m;
  }
};

namespace detail {

inline std::string numbered_id(char prefix, std::size_t k, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%0*zu", prefix, width, k);
  return buf;
}

inline ItemParams sample_item(Rng& rng, double q, const GroundTruthOptions& o) {
  ItemParams ip;
  for (int k = 1; k < 4; ++k) ip.b[k] = rng.uniform(0.0, o.modality_b_hi * q);
  const double lo = std::max({o.base_b_floor * q, ip.b[kImage], ip.b[kText]});
  ip.b[kBase] = rng.uniform(std::min(lo, q), q);
  const double a_hi = std::min(o.a_hi, q);
  for (auto& x : ip.a) x = rng.uniform(std::min(o.a_lo, a_hi), a_hi);
  return ip;
}

}  // namespace detail

inline GroundTruth sample_ground_truth(std::size_t m, std::size_t n, double q, SignConvention conv, std::uint64_t seed,
                                       const GroundTruthOptions& opt = {}) {
  if (m < 2 || n < 2) throw ValidationError("sample_ground_truth: need at least 2 subjects and 2 items");
  if (!(q > 0)) throw ValidationError("sample_ground_truth: q must be positive");
  if (opt.n_choices < 2) throw ValidationError("sample_ground_truth: n_choices must be at least 2");
  GroundTruth gt;
  gt.q = q;
  gt.convention = conv;
  gt.family = opt.family;
  gt.n_choices = opt.n_choices;
  Rng rng(derive_seed(seed, {0x6700}));
  for (std::size_t i = 0; i < m; ++i) {
    gt.subject_ids.push_back(detail::numbered_id('m', i + 1, 2));
    SubjectParams sp;
    for (auto& x : sp.theta) x = rng.uniform(0.0, opt.theta_hi * q);
    gt.subjects.push_back(sp);
  }
  for (std::size_t j = 0; j < n; ++j) {
    gt.item_ids.push_back(detail::numbered_id('q', j + 1, 4));
    gt.items.push_back(detail::sample_item(rng, q, opt));
    gt.labels[gt.item_ids.back()] = QualityLabel::Original;
  }
  return gt;
}

// Share of new low-quality items per type A, B, C.
struct LowQualityMix {
  double a = 1.0 / 3;
  double b = 1.0 / 3;
  double c = 1.0 / 3;
};

// Splits `total` by proportions with the largest-remainder rule (ties to the
// earlier type).
inline std::array<std::size_t, 3> apportion(std::size_t total, const LowQualityMix& mix) {
  const double w[3] = {mix.a, mix.b, mix.c};
  std::array<std::size_t, 3> out{};
  double frac[3];
  std::size_t used = 0;
  for (int k = 0; k < 3; ++k) {
    const double exact = w[k] * double(total);
    out[k] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    frac[k] = exact - double(out[k]);
    used += out[k];
  }
  while (used < total) {
    int best = 0;
    for (int k = 1; k < 3; ++k) if (frac[k] > frac[best] + 1e-12) best = k;
    ++out[best];
    frac[best] = -1;
    ++used;
  }
  return out;
}

// Low-quality parameter patterns:
//   A (all parts swapped, unsolvable): a = 0 and b = (ln(n_choices - 1), 0, 0, 0),
//     so every subject answers at the chance rate 1/n_choices in every format.
//   B (image swapped, text carries the answer): b_text = b_base, b_image =
//     b_cross = 0, a_image = a_cross = 0.
//   C (text swapped): the mirror image of B.
inline ItemParams make_low_quality(ItemParams ip, QualityLabel kind, const GroundTruth& gt) {
  switch (kind) {
    case QualityLabel::LowA: {
      ip.a = {0, 0, 0, 0};
      if (gt.family == Family::M2IRT) {
        // a = 0 would pin the M2 kernel at 0.5; use a small slope and solve
        // sigmoid(0.2 (theta_mid - b)) = 1 / n_choices instead.
        ip.a[kBase] = 0.2;
        ip.b = {std::clamp(gt.q / 2 + std::log(double(gt.n_choices - 1)) / 0.2, 0.0, gt.q), 0, 0, 0};
      } else {
        ip.b = {std::min(std::log(double(gt.n_choices - 1)), gt.q), 0, 0, 0};
      }
      break;
    }
    case QualityLabel::LowB:
      ip.b[kText] = ip.b[kBase];
      ip.b[kImage] = ip.b[kCross] = 0;
      ip.a[kImage] = ip.a[kCross] = 0;
      break;
    case QualityLabel::LowC:
      ip.b[kImage] = ip.b[kBase];
      ip.b[kText] = ip.b[kCross] = 0;
      ip.a[kText] = ip.a[kCross] = 0;
      break;
    case QualityLabel::Original: break;
  }
  return ip;
}

// Appends ceil(fraction n / (1 - fraction)) low-quality items so the final
// pool has the requested contamination fraction.
inline GroundTruth inject_low_quality(const GroundTruth& gt, double fraction, const LowQualityMix& mix,
                                      std::uint64_t seed, const GroundTruthOptions& opt = {}) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw ValidationError("inject_low_quality: fraction must be in [0, 1)");
  if (mix.a < 0 || mix.b < 0 || mix.c < 0 || std::abs(mix.a + mix.b + mix.c - 1.0) > 1e-9) {
    throw ValidationError("inject_low_quality: mix must be non-negative and sum to 1");
  }
  GroundTruth out = gt;
  if (fraction == 0.0) return out;
  const double n = double(gt.item_ids.size());
  const auto count = static_cast<std::size_t>(std::ceil(fraction * n / (1.0 - fraction) - 1e-9));
  const auto per_type = apportion(count, mix);

  std::vector<QualityLabel> kinds;
  const QualityLabel types[3] = {QualityLabel::LowA, QualityLabel::LowB, QualityLabel::LowC};
  for (int k = 0; k < 3; ++k) kinds.insert(kinds.end(), per_type[k], types[k]);
  Rng rng(derive_seed(seed, {0x10e, gt.item_ids.size()}));
  rng.shuffle(kinds);

  std::size_t next = gt.item_ids.size();
  for (auto kind : kinds) {
    ++next;
    const auto id = detail::numbered_id('q', next, 4);
    out.item_ids.push_back(id);
    out.items.push_back(make_low_quality(detail::sample_item(rng, gt.q, opt), kind, gt));
    out.labels[id] = kind;
  }
  return out;
}

// Draws r ~ Bernoulli(P) for every kept (subject, item, format) cell; each
// cell is kept with probability `density`. Records are subject-major.
inline ResponseTensor sample_responses(const GroundTruth& gt, std::span<const FormatIndicator> formats, double density,
                                       std::uint64_t seed) {
  if (formats.empty()) throw ValidationError("sample_responses: no formats");
  if (!(density > 0.0 && density <= 1.0)) throw ValidationError("sample_responses: density must be in (0, 1]");
  Rng rng(derive_seed(seed, {0x4e5}));
  std::vector<ResponseRecord> records;
  records.reserve(static_cast<std::size_t>(
      density * double(gt.subjects.size() * gt.items.size() * formats.size()) * 1.05 + 16));
  for (std::size_t i = 0; i < gt.subjects.size(); ++i) {
    for (std::size_t j = 0; j < gt.items.size(); ++j) {
      for (auto s : formats) {
        if (density < 1.0 && !(rng.uniform() < density)) continue;
        const int r = rng.uniform() < gt.prob(i, j, s) ? 1 : 0;
        records.push_back({gt.subject_ids[i], gt.item_ids[j], s, r});
      }
    }
  }
  return ResponseTensor(std::move(records), gt.subject_ids, gt.item_ids, gt.labels);
}

// ---------------------------------------------------------------------------
// Serialization: the fitted-model schema plus labels and n_choices.

inline nlohmann::ordered_json to_json(const GroundTruth& gt) {
  auto j = to_json(gt.to_model());
  j["n_choices"] = gt.n_choices;
  auto& labels = j["labels"] = nlohmann::ordered_json::object();
  for (const auto& id : gt.item_ids) labels[id] = std::string(to_string(gt.labels.at(id)));
  return j;
}

inline GroundTruth ground_truth_from_json(const nlohmann::ordered_json& j) {
  auto m = model_from_json(j);
  if (is_classic(m.family())) throw ValidationError("ground truth must use a multimodal family");
  GroundTruth gt;
  gt.q = m.q();
  gt.convention = m.config.convention;
  gt.family = m.family();
  gt.n_choices = j.value("n_choices", 4);
  gt.subject_ids = m.subject_ids;
  gt.item_ids = m.item_ids;
  for (std::size_t i = 0; i < m.subject_ids.size(); ++i) gt.subjects.push_back(m.subject_params(i));
  for (std::size_t k = 0; k < m.item_ids.size(); ++k) gt.items.push_back(m.item_params(k));
  for (const auto& id : gt.item_ids) {
    if (j.contains("labels") && j["labels"].contains(id)) {
      gt.labels[id] = parse_quality(j["labels"][id].get<std::string>());
    } else {
      gt.labels[id] = QualityLabel::Original;
    }
  }
  return gt;
}

inline void save_ground_truth(const std::string& path, const GroundTruth& gt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << to_json(gt).dump(2) << '\n';
}

inline GroundTruth load_ground_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  try {
    return ground_truth_from_json(nlohmann::ordered_json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid ground-truth JSON: ") + e.what(), 0);
  }
}

}  // namespace mmirt
