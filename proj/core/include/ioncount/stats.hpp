#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace ioncount {

// Standard normal CDF via erfc.
double normal_cdf(double z);

// P(X = k) for X ~ Poisson(lambda).
double poisson_pmf(int k, double lambda);

// Integral of a Gaussian density with the given area/mean/sigma over
// [lo, hi], computed by composite Simpson quadrature. Kept independent of
// normal_cdf on purpose: error-budget rates are checked against the closed
// form elsewhere.
double gaussian_area_between(double area, double mean, double sigma, double lo,
                             double hi);

struct ProfileInterval {
  double estimate = 0.0;
  double sigma_minus = 0.0;  // lower half-width at delta logL = 1/2
  double sigma_plus = 0.0;   // upper half-width at delta logL = 1/2
  bool upper_bound_only = false;
};

// Maximum-likelihood Poisson mean of a sample of counts, with an asymmetric
// profile-likelihood interval. The MLE is located numerically; it coincides
// with the sample mean (asserted in tests).
ProfileInterval poisson_mle_profile(const std::vector<int>& counts,
                                    double delta_logl = 0.5);

// Solve f(x) = 0 by bisection on [lo, hi]; f(lo) and f(hi) must bracket.
double bisect(const std::function<double(double)>& f, double lo, double hi,
              double tol = 1e-12, int max_iter = 200);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

double mean(const std::vector<double>& v);
double sample_stddev(const std::vector<double>& v);

}  // namespace ioncount
