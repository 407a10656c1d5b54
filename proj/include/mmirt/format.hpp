#pragma once

#include <array>
#include <compare>
#include <string>
#include <string_view>

#include "mmirt/error.hpp"

namespace mmirt {

// Which stimuli accompany a question: image and/or text.
struct FormatIndicator {
  int image = 1;
  int text = 1;

  constexpr FormatIndicator() = default;
  constexpr FormatIndicator(int image_flag, int text_flag) : image(image_flag), text(text_flag) {
    if ((image_flag != 0 && image_flag != 1) || (text_flag != 0 && text_flag != 1)) {
      throw ValidationError("format flags must be 0 or 1");
    }
  }

  constexpr int both() const noexcept { return image * text; }

  // (1, s_image, s_text, s_image*s_text): weights of the additive composition.
  constexpr std::array<double, 4> unsigned_vector() const noexcept {
    return {1.0, double(image), double(text), double(both())};
  }

  // (1, -s_image, -s_text, -s_image*s_text).
  constexpr std::array<double, 4> signed_vector() const noexcept {
    return {1.0, -double(image), -double(text), -double(both())};
  }

  // Dense code in [0, 4): image*2 + text.
  constexpr int code() const noexcept { return image * 2 + text; }

  static constexpr FormatIndicator from_code(int code) { return {code / 2, code % 2}; }

  std::string str() const { return std::to_string(image) + std::to_string(text); }

  friend constexpr auto operator<=>(const FormatIndicator&, const FormatIndicator&) = default;
};

inline constexpr FormatIndicator kFullFormat{1, 1};

inline constexpr std::array<FormatIndicator, 4> kAllFormats{
    FormatIndicator{0, 0}, FormatIndicator{0, 1}, FormatIndicator{1, 0}, FormatIndicator{1, 1}};

// Parses "11", "01", ... or "1,1".
inline FormatIndicator parse_format(std::string_view text) {
  std::string digits;
  for (char c : text) {
    if (c == '0' || c == '1') {
      digits.push_back(c);
    } else if (c != ',' && c != ' ' && c != '(' && c != ')') {
      throw ValidationError("bad format indicator '" + std::string(text) + "'");
    }
  }
  if (digits.size() != 2) throw ValidationError("bad format indicator '" + std::string(text) + "'");
  return {digits[0] - '0', digits[1] - '0'};
}

enum class QualityLabel { Original, LowA, LowB, LowC };

inline std::string_view to_string(QualityLabel q) {
  switch (q) {
    case QualityLabel::Original: return "original";
    case QualityLabel::LowA: return "low_a";
    case QualityLabel::LowB: return "low_b";
    case QualityLabel::LowC: return "low_c";
  }
  return "original";
}

inline QualityLabel parse_quality(std::string_view s) {
  if (s == "original") return QualityLabel::Original;
  if (s == "low_a") return QualityLabel::LowA;
  if (s == "low_b") return QualityLabel::LowB;
  if (s == "low_c") return QualityLabel::LowC;
  throw ValidationError("unknown quality label '" + std::string(s) + "'");
}

inline bool is_low_quality(QualityLabel q) noexcept { return q != QualityLabel::Original; }

}  // namespace mmirt
