#include "tonopah/harness/metrics.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

namespace tonopah::harness {

std::size_t buffer_size(sim::BitRate rate, SimTime rtt) {
  if (rate.is_infinite() || rtt.count() <= 0)
    throw std::invalid_argument("buffer_size needs a positive rate and rtt");
  constexpr std::size_t kFloor = 100;
  const auto bits = static_cast<unsigned __int128>(rate.bits_per_second) *
                    static_cast<unsigned __int128>(rtt.count());
  // bits / 1e9 / (8 * 1500), rounded up.
  const unsigned __int128 per_packet = static_cast<unsigned __int128>(8 * 1500) * 1'000'000'000u;
  const auto packets = static_cast<std::size_t>((bits + per_packet - 1) / per_packet);
  return std::max(packets, kFloor);
}

double detection_accuracy(std::span<const detect::Transition> transitions, bool ground_truth,
                          SimTime duration, bool initial) {
  if (duration.count() <= 0) throw std::invalid_argument("duration must be positive");
  SimTime matched{0};
  SimTime cursor{0};
  bool state = initial;
  for (const auto& tr : transitions) {
    const SimTime at = std::clamp(tr.at, SimTime{0}, duration);
    if (at < cursor) throw std::invalid_argument("transitions must be sorted by time");
    if (state == ground_truth) matched += at - cursor;
    cursor = at;
    state = tr.detected;
  }
  if (state == ground_truth) matched += duration - cursor;
  return static_cast<double>(matched.count()) / static_cast<double>(duration.count());
}

std::vector<EcdfPoint> ecdf(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  std::vector<EcdfPoint> out;
  const auto n = static_cast<double>(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i + 1 < samples.size() && samples[i + 1] == samples[i]) continue;
    out.push_back({samples[i], static_cast<double>(i + 1) / n});
  }
  return out;
}

double ecdf_at(std::span<const EcdfPoint> curve, double x) {
  double f = 0;
  for (const auto& p : curve) {
    if (p.value > x) break;
    f = p.cumulative_fraction;
  }
  return f;
}

double mean(std::span<const double> v) {
  if (v.empty()) return 0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

namespace {

double sample_variance(std::span<const double> v, double m) {
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

}  // namespace

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2)
    throw StatisticsError("welch_t_test needs at least two samples per group");
  const double ma = mean(a);
  const double mb = mean(b);
  const double va = sample_variance(a, ma) / static_cast<double>(a.size());
  const double vb = sample_variance(b, mb) / static_cast<double>(b.size());
  const double se2 = va + vb;
  if (!(se2 > 0)) throw StatisticsError("welch_t_test: both samples have zero variance");

  WelchResult r;
  r.t = (ma - mb) / std::sqrt(se2);
  const double dfa = va * va / static_cast<double>(a.size() - 1);
  const double dfb = vb * vb / static_cast<double>(b.size() - 1);
  r.df = se2 * se2 / (dfa + dfb);
  const boost::math::students_t_distribution<double> dist(r.df);
  r.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(r.t))));
  return r;
}

}  // namespace tonopah::harness
