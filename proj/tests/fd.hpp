#pragma once

#include <functional>
#include <vector>

#include "helpers.hpp"

namespace terraseg::testutil {

// Worst relative error between `grad` and central differences of `f` at `x`.
inline double fd_check(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
                       const std::vector<double>& grad, double h = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    worst = std::max(worst, rel_err(grad[i], (up - down) / (2.0 * h)));
  }
  return worst;
}

}  // namespace terraseg::testutil
