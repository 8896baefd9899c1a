#include <hetsync/errors.hpp>
#include <hetsync/rate.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace hetsync {

namespace {

Window checked_window(std::span<const double> series, Window w) {
  if (series.empty()) throw InvalidArgument("empty series");
  if (w.end >= series.size()) throw InvalidArgument("window extends past the end of the series");
  if (w.start >= w.end) throw InvalidArgument("window start must precede its end");
  return w;
}

bool tail_trend(std::span<const double> series, Window window, const TailOptions& options,
                bool decreasing) {
  window = checked_window(series, window);
  const std::size_t length = window.end - window.start + 1;
  const auto tail = static_cast<std::size_t>(std::ceil(options.tail_fraction * static_cast<double>(length)));
  const std::size_t first = window.end + 1 - std::max<std::size_t>(tail, 2);
  std::size_t pairs = 0;
  std::size_t violations = 0;
  for (std::size_t t = std::max(first, window.start); t < window.end; ++t) {
    ++pairs;
    const bool ok = decreasing ? series[t + 1] < series[t] : series[t + 1] > series[t];
    if (!ok) ++violations;
  }
  const auto allowed = static_cast<std::size_t>(std::floor(options.violation_fraction * static_cast<double>(pairs)));
  return pairs > 0 && violations <= allowed;
}

}  // namespace

RateEstimate estimate_rate(std::span<const double> series, Window window, double floor_fraction) {
  window = checked_window(series, window);
  double reference = series[0];
  if (!(reference > 0.0)) {
    reference = *std::max_element(series.begin() + static_cast<std::ptrdiff_t>(window.start),
                                  series.begin() + static_cast<std::ptrdiff_t>(window.end) + 1);
  }
  if (!(reference > 0.0)) throw InvalidArgument("estimate_rate: series is identically zero");
  const double floor = std::max(1e-300, floor_fraction * reference);

  std::vector<double> ts;
  std::vector<double> logs;
  for (std::size_t t = window.start; t <= window.end; ++t) {
    if (series[t] > floor && std::isfinite(series[t])) {
      ts.push_back(static_cast<double>(t));
      logs.push_back(std::log(series[t]));
    }
  }
  if (ts.size() < 5) throw InvalidArgument("estimate_rate: fewer than 5 usable points in window");

  const double n = static_cast<double>(ts.size());
  double t_mean = 0.0;
  double y_mean = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    t_mean += ts[k];
    y_mean += logs[k];
  }
  t_mean /= n;
  y_mean /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    sxx += (ts[k] - t_mean) * (ts[k] - t_mean);
    sxy += (ts[k] - t_mean) * (logs[k] - y_mean);
  }
  const double slope = sxy / sxx;
  double sse = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const double fit = y_mean + slope * (ts[k] - t_mean);
    sse += (logs[k] - fit) * (logs[k] - fit);
  }
  return RateEstimate{std::exp(slope), window, std::sqrt(sse / n), ts.size()};
}

std::vector<double> ratio_series(std::span<const double> series, double r) {
  if (!(r > 0.0 && r < 1.0)) throw InvalidArgument("ratio_series: need 0 < r < 1");
  std::vector<double> out(series.size());
  for (std::size_t t = 0; t < series.size(); ++t) {
    out[t] = series[t] / std::pow(r, static_cast<double>(t));
  }
  return out;
}

bool tail_decreasing(std::span<const double> series, Window window, const TailOptions& options) {
  return tail_trend(series, window, options, true);
}

bool tail_increasing(std::span<const double> series, Window window, const TailOptions& options) {
  return tail_trend(series, window, options, false);
}

bool envelope_nonincreasing(std::span<const double> series, std::size_t start, double slack,
                            std::size_t block) {
  if (block == 0) throw InvalidArgument("block length must be positive");
  double lowest = std::numeric_limits<double>::infinity();
  for (std::size_t s = start; s < series.size(); s += block) {
    const std::size_t e = std::min(series.size(), s + block);
    double peak = 0.0;
    for (std::size_t t = s; t < e; ++t) {
      if (!std::isfinite(series[t])) return false;
      peak = std::max(peak, series[t]);
    }
    if (peak > (1.0 + slack) * lowest) return false;
    lowest = std::min(lowest, peak);
  }
  return true;
}

}  // namespace hetsync
