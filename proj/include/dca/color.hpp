#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <string>

namespace dca {

struct Color {
  int r = 0;
  int g = 0;
  int b = 0;
  double a = 1.0;

  bool operator==(const Color&) const = default;

  bool valid() const {
    auto in8 = [](int c) { return c >= 0 && c <= 255; };
    return in8(r) && in8(g) && in8(b) && a >= 0.0 && a <= 1.0;
  }

  std::string hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out = "#";
    for (int c : {r, g, b}) {
      out += digits[(c >> 4) & 0xf];
      out += digits[c & 0xf];
    }
    return out;
  }
};

inline constexpr Color kWhite{255, 255, 255, 1.0};
inline constexpr Color kBlack{0, 0, 0, 1.0};

/// Source-over compositing of `top` onto an opaque `bottom`; the result is opaque.
inline Color composite_over(const Color& top, const Color& bottom) {
  auto mix = [&](int t, int u) {
    return static_cast<int>(std::lround(top.a * t + (1.0 - top.a) * u));
  };
  return Color{mix(top.r, bottom.r), mix(top.g, bottom.g), mix(top.b, bottom.b), 1.0};
}

/// sRGB channel (0-255) to linear light.
inline double linearize_channel(int c) {
  const double v = c / 255.0;
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

inline double relative_luminance(const Color& c) {
  return 0.2126 * linearize_channel(c.r) + 0.7152 * linearize_channel(c.g) +
         0.0722 * linearize_channel(c.b);
}

/// WCAG contrast ratio of two opaque colors, in [1, 21].
inline double contrast_ratio(const Color& c1, const Color& c2) {
  const double l1 = relative_luminance(c1);
  const double l2 = relative_luminance(c2);
  return (std::max(l1, l2) + 0.05) / (std::min(l1, l2) + 0.05);
}

struct Hsv {
  double hue = 0.0;         // degrees in [0, 360)
  double saturation = 0.0;  // [0, 1]
  double value = 0.0;       // [0, 1]
};

inline Hsv to_hsv(const Color& c) {
  const int mx = std::max({c.r, c.g, c.b});
  const int mn = std::min({c.r, c.g, c.b});
  Hsv out;
  out.value = mx / 255.0;
  out.saturation = mx == 0 ? 0.0 : static_cast<double>(mx - mn) / mx;
  if (mx == mn) return out;
  const double d = mx - mn;
  double h;
  if (mx == c.r)
    h = 60.0 * std::fmod((c.g - c.b) / d, 6.0);
  else if (mx == c.g)
    h = 60.0 * ((c.b - c.r) / d + 2.0);
  else
    h = 60.0 * ((c.r - c.g) / d + 4.0);
  if (h < 0) h += 360.0;
  out.hue = h;
  return out;
}

/// Circular distance between two hues, in [0, 180].
inline double hue_distance(double h1, double h2) {
  const double d = std::fabs(h1 - h2);
  return std::min(d, 360.0 - d);
}

}  // namespace dca
