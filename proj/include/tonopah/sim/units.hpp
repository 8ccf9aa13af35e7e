#pragma once

#include <chrono>
#include <compare>
#include <cstdint>

namespace tonopah::sim {

/// Simulation clock: integer nanoseconds since simulation start.
using SimTime = std::chrono::nanoseconds;

using ByteCount = std::int64_t;

using namespace std::chrono_literals;

struct BitRate {
  std::uint64_t bits_per_second = 0;

  static constexpr BitRate mbps(std::uint64_t m) { return {m * 1'000'000}; }
  static constexpr BitRate infinite() { return {0}; }

  constexpr bool is_infinite() const { return bits_per_second == 0; }
  constexpr double mbps_value() const { return static_cast<double>(bits_per_second) / 1e6; }

  friend constexpr auto operator<=>(BitRate, BitRate) = default;
};

/// Time to clock `bytes` onto a link of rate `rate`, rounded up to the next
/// nanosecond. An infinite rate serializes instantly.
constexpr SimTime serialization_time(ByteCount bytes, BitRate rate) {
  if (rate.is_infinite() || bytes <= 0) return SimTime{0};
  const auto bits = static_cast<unsigned __int128>(bytes) * 8u * 1'000'000'000u;
  const auto ns = (bits + rate.bits_per_second - 1) / rate.bits_per_second;
  return SimTime{static_cast<std::int64_t>(ns)};
}

/// Rate that moves `bytes` in `interval`. Zero interval yields infinite rate.
constexpr BitRate rate_from(ByteCount bytes, SimTime interval) {
  if (interval.count() <= 0) return BitRate::infinite();
  const auto bits = static_cast<unsigned __int128>(bytes) * 8u * 1'000'000'000u;
  auto bps = static_cast<std::uint64_t>(bits / static_cast<std::uint64_t>(interval.count()));
  return BitRate{bps == 0 ? 1 : bps};
}

constexpr double to_ms(SimTime t) { return static_cast<double>(t.count()) / 1e6; }
constexpr double to_seconds(SimTime t) { return static_cast<double>(t.count()) / 1e9; }

}  // namespace tonopah::sim
