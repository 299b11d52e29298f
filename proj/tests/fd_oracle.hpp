#pragma once

// Central finite differences with step refinement. Starting from h0, the
// estimate at h is compared with the one at h / 2; while they disagree (the
// interval straddles a ReLU or max-pool kink) the step is halved.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

inline double central_difference(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
                                 std::size_t k, double h) {
  const double x0 = x[k];
  x[k] = x0 + h;
  const double plus = f(x);
  x[k] = x0 - h;
  const double minus = f(x);
  return (plus - minus) / (2.0 * h);
}

inline double fd_derivative(const std::function<double(const std::vector<double>&)>& f, const std::vector<double>& x,
                            std::size_t k, double h0 = 1e-3) {
  double h = h0;
  double coarse = central_difference(f, x, k, h);
  for (; h > 1e-9; h *= 0.5) {
    const double fine = central_difference(f, x, k, 0.5 * h);
    if (std::abs(fine - coarse) <= 1e-7 * std::max(std::abs(fine), std::abs(coarse)) + 1e-11) {
      return (4.0 * fine - coarse) / 3.0;
    }
    coarse = fine;
  }
  return coarse;
}

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

// Largest per-coordinate relative error of `grad` against the FD oracle.
inline double max_fd_error(const std::function<double(const std::vector<double>&)>& f, const std::vector<double>& x,
                           const std::vector<double>& grad) {
  double worst = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) worst = std::max(worst, relative_error(grad[k], fd_derivative(f, x, k)));
  return worst;
}

}  // namespace oracle
