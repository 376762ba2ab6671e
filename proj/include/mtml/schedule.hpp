#pragma once

#include <vector>

namespace mtml {

struct ThresholdSchedule {
  double tau_min = 0.0;
  double tau_max = 0.0;
  double dtau = 0.0;
  std::vector<double> thresholds;

  std::size_t count() const { return thresholds.size(); }
};

// Even sampling of [tau_min, tau_max] with step dtau:
//   N = (tau_max - tau_min)/dtau + 1, tau_i = tau_min + dtau*(i-1).
// N must be integral within 1e-9; each tau_i snaps to 9 decimal places so
// grid points like 0.15 + 2*0.1 compare bit-equal to the literal 0.35.
ThresholdSchedule sample_thresholds(double tau_min, double tau_max, double dtau);

}  // namespace mtml
