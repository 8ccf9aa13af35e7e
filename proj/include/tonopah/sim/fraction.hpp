#pragma once

#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>

namespace tonopah::sim {

/// Exact non-negative rational, kept in lowest terms.
struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;

  constexpr Fraction() = default;
  constexpr Fraction(std::int64_t n, std::int64_t d) : num(n), den(d) {
    const auto g = std::gcd(num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  constexpr double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  constexpr Fraction complement() const { return {den - num, den}; }

  friend constexpr bool operator==(const Fraction&, const Fraction&) = default;
  friend constexpr bool operator<(const Fraction& a, const Fraction& b) {
    return a.num * b.den < b.num * a.den;
  }
};

/// Accepts "a/b" or a decimal such as "0.125".
std::optional<Fraction> parse_fraction(std::string_view text);
std::string to_string(const Fraction& f);

}  // namespace tonopah::sim
