#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "tonopah/detect/detector.hpp"
#include "tonopah/sim/units.hpp"

namespace tonopah::harness {

using sim::SimTime;

/// Bottleneck buffer in packets: the bandwidth-delay product in 1500 B
/// packets, rounded up, but never fewer than 100.
std::size_t buffer_size(sim::BitRate rate, SimTime rtt);

/// Time-weighted fraction of [0, duration] during which the signal equals
/// `ground_truth`. The signal starts at `initial` and flips at each
/// transition; transitions must be sorted and lie within [0, duration].
double detection_accuracy(std::span<const detect::Transition> transitions, bool ground_truth,
                          SimTime duration, bool initial = false);

struct EcdfPoint {
  double value = 0;
  double cumulative_fraction = 0;
  friend bool operator==(const EcdfPoint&, const EcdfPoint&) = default;
};

/// One point per distinct sample value: the fraction of samples <= value.
std::vector<EcdfPoint> ecdf(std::vector<double> samples);
/// ECDF evaluated at an arbitrary x.
double ecdf_at(std::span<const EcdfPoint> curve, double x);

class StatisticsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct WelchResult {
  double t = 0;
  double df = 0;
  double p = 1;  // two-sided
};

/// Welch's unequal-variance t-test. Throws StatisticsError when either
/// sample has fewer than two values or both variances are zero.
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> v);

}  // namespace tonopah::harness
