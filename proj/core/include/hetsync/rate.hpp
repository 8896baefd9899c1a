#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hetsync {

// Inclusive index range [start, end].
struct Window {
  std::size_t start = 0;
  std::size_t end = 0;
};

struct RateEstimate {
  double rate = 0.0;      // exp(slope) of the log-linear fit
  Window window;
  double residual = 0.0;  // RMS of the fit in log space
  std::size_t points = 0; // samples actually used
};

/// Least-squares fit of log(series) against t over the window. Samples that
/// are nonpositive or below floor_fraction * series[0] are left out.
/// Throws InvalidArgument when fewer than 5 samples remain.
RateEstimate estimate_rate(std::span<const double> series, Window window,
                           double floor_fraction = 1e-13);

/// series[t] / r^t
std::vector<double> ratio_series(std::span<const double> series, double r);

struct TailOptions {
  double tail_fraction = 0.3;      // last 30% of the window
  double violation_fraction = 0.05;  // share of adjacent pairs allowed to break the trend
};

bool tail_decreasing(std::span<const double> series, Window window, const TailOptions& options = {});
bool tail_increasing(std::span<const double> series, Window window, const TailOptions& options = {});

/// Envelope test for sequences that oscillate while decaying: split
/// series[start..] into blocks and require every block maximum to stay within
/// (1 + slack) of every earlier block maximum.
bool envelope_nonincreasing(std::span<const double> series, std::size_t start, double slack,
                            std::size_t block = 10);

}  // namespace hetsync
