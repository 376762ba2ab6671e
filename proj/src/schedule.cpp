#include "mtml/schedule.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace mtml {
namespace {

double snap9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9f", v);
  return std::strtod(buf, nullptr);
}

}  // namespace

ThresholdSchedule sample_thresholds(double tau_min, double tau_max, double dtau) {
  if (tau_min < 0.0 || tau_max < tau_min) {
    throw std::invalid_argument("thresholds: need tau_max >= tau_min >= 0");
  }
  ThresholdSchedule s;
  s.tau_min = tau_min;
  s.tau_max = tau_max;
  s.dtau = dtau;
  if (tau_max == tau_min) {
    s.thresholds = {tau_min};
    return s;
  }
  if (!(dtau > 0.0)) throw std::invalid_argument("thresholds: dtau must be > 0");
  const double n_real = (tau_max - tau_min) / dtau + 1.0;
  const double n_round = std::round(n_real);
  const double remainder = n_real - n_round;
  if (std::abs(remainder) > 1e-9 || n_round < 1.0) {
    char msg[160];
    std::snprintf(msg, sizeof msg,
                  "thresholds: (tau_max-tau_min)/dtau+1 = %.12g is not integral "
                  "(fractional remainder %.12g)",
                  n_real, remainder);
    throw std::invalid_argument(msg);
  }
  const std::size_t n = static_cast<std::size_t>(n_round);
  s.thresholds.reserve(n);
  for (std::size_t i = 1; i <= n; ++i) {
    s.thresholds.push_back(snap9(tau_min + dtau * static_cast<double>(i - 1)));
  }
  return s;
}

}  // namespace mtml
