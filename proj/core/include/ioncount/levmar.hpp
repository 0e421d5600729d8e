#pragma once

#include <functional>
#include <string>
#include <vector>

namespace ioncount {

// Residual function: fills r (fixed size) from parameters p.
using ResidualFn =
    std::function<void(const std::vector<double>& p, std::vector<double>& r)>;

struct LevMarOptions {
  int max_iterations = 200;
  double ftol = 1e-12;   // relative cost decrease
  double xtol = 1e-12;   // relative step size
  double initial_lambda = 1e-3;
};

struct LevMarResult {
  std::vector<double> params;
  std::vector<double> std_errors;  // from (J^T J)^-1 scaled by residual var
  double cost = 0.0;               // 0.5 * sum r^2 at the solution
  int iterations = 0;
  bool converged = false;
};

// Dense Levenberg-Marquardt with forward-difference Jacobians. Small problems
// only (the fits in this project have 4-9 parameters).
LevMarResult levmar_fit(const ResidualFn& fn, std::vector<double> initial,
                        int n_residuals, const LevMarOptions& opts = {});

}  // namespace ioncount
