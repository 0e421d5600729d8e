#include "ioncount/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ioncount {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double poisson_pmf(int k, double lambda) {
  if (k < 0) return 0.0;
  if (lambda <= 0.0) return k == 0 ? 1.0 : 0.0;
  return std::exp(k * std::log(lambda) - lambda - std::lgamma(k + 1.0));
}

double gaussian_area_between(double area, double mean, double sigma, double lo,
                             double hi) {
  if (hi <= lo) return 0.0;
  // Clip to +-12 sigma; beyond that the density underflows anyway.
  lo = std::max(lo, mean - 12.0 * sigma);
  hi = std::min(hi, mean + 12.0 * sigma);
  if (hi <= lo) return 0.0;
  const int n = 4000;  // even
  const double h = (hi - lo) / n;
  const double inv = 1.0 / (sigma * std::sqrt(2.0 * 3.14159265358979323846));
  auto pdf = [&](double x) {
    const double z = (x - mean) / sigma;
    return inv * std::exp(-0.5 * z * z);
  };
  double sum = pdf(lo) + pdf(hi);
  for (int i = 1; i < n; ++i) sum += (i % 2 ? 4.0 : 2.0) * pdf(lo + i * h);
  return area * sum * h / 3.0;
}

double bisect(const std::function<double(double)>& f, double lo, double hi,
              double tol, int max_iter) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (flo * fhi > 0.0) throw std::runtime_error("bisect: no sign change");
  for (int i = 0; i < max_iter && hi - lo > tol; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if (flo * fm < 0.0) {
      hi = mid;
    } else {
      lo = mid;
      flo = fm;
    }
  }
  return 0.5 * (lo + hi);
}

ProfileInterval poisson_mle_profile(const std::vector<int>& counts,
                                    double delta_logl) {
  if (counts.empty())
    throw std::invalid_argument("poisson_mle_profile: empty sample");
  const double n = static_cast<double>(counts.size());
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);

  // logL(lambda) up to a constant: total*log(lambda) - n*lambda.
  auto logl = [&](double lam) {
    if (lam <= 0.0) return total > 0.0 ? -1e300 : 0.0;
    return total * std::log(lam) - n * lam;
  };

  ProfileInterval out;
  if (total == 0.0) {
    // Degenerate: lambda_hat = 0, one-sided upper bound from logL drop.
    out.estimate = 0.0;
    out.sigma_minus = 0.0;
    out.sigma_plus = delta_logl / n;  // exp(-n*lambda) drop
    out.upper_bound_only = true;
    return out;
  }

  // Locate the MLE numerically on the score function.
  auto score = [&](double lam) { return total / lam - n; };
  const double guess = total / n;
  out.estimate = bisect(score, guess * 0.5, guess * 2.0, 1e-13);

  const double lmax = logl(out.estimate);
  auto drop = [&](double lam) { return logl(lam) - (lmax - delta_logl); };
  double lo = out.estimate;
  while (drop(lo) > 0.0 && lo > 1e-12) lo *= 0.5;
  double hi = out.estimate;
  while (drop(hi) > 0.0) hi *= 2.0;
  out.sigma_minus = out.estimate - bisect(drop, lo, out.estimate, 1e-12);
  out.sigma_plus = bisect(drop, out.estimate, hi, 1e-12) - out.estimate;
  return out;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_line: need >= 2 matched points");
  const double n = static_cast<double>(x.size());
  const double sx = std::accumulate(x.begin(), x.end(), 0.0);
  const double sy = std::accumulate(y.begin(), y.end(), 0.0);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  LinearFit f;
  f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

double sample_stddev(const std::vector<double>& v) {
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / (v.size() - 1));
}

}  // namespace ioncount
