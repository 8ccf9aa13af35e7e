#include "tonopah/sim/fraction.hpp"

#include <charconv>

namespace tonopah::sim {

namespace {

std::optional<std::int64_t> parse_int(std::string_view s) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

}  // namespace

std::optional<Fraction> parse_fraction(std::string_view text) {
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    auto n = parse_int(text.substr(0, slash));
    auto d = parse_int(text.substr(slash + 1));
    if (!n || !d || *d <= 0 || *n < 0) return std::nullopt;
    return Fraction{*n, *d};
  }
  auto dot = text.find('.');
  if (dot == std::string_view::npos) {
    auto n = parse_int(text);
    if (!n || *n < 0) return std::nullopt;
    return Fraction{*n, 1};
  }
  const auto whole = text.substr(0, dot);
  const auto frac = text.substr(dot + 1);
  if (frac.empty() || frac.size() > 12) return std::nullopt;
  std::int64_t den = 1;
  for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
  auto w = whole.empty() ? std::optional<std::int64_t>{0} : parse_int(whole);
  auto f = parse_int(frac);
  if (!w || !f || *w < 0 || *f < 0) return std::nullopt;
  return Fraction{*w * den + *f, den};
}

std::string to_string(const Fraction& f) {
  return std::to_string(f.num) + "/" + std::to_string(f.den);
}

}  // namespace tonopah::sim
