#include "ioncount/levmar.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace ioncount {

namespace {

Eigen::MatrixXd numeric_jacobian(const ResidualFn& fn,
                                 const std::vector<double>& p,
                                 const Eigen::VectorXd& r0) {
  const int np = static_cast<int>(p.size());
  const int nr = static_cast<int>(r0.size());
  Eigen::MatrixXd jac(nr, np);
  std::vector<double> pp = p;
  std::vector<double> rp(nr);
  for (int j = 0; j < np; ++j) {
    const double h = std::max(1e-7, 1e-7 * std::abs(p[j]));
    pp[j] = p[j] + h;
    fn(pp, rp);
    for (int i = 0; i < nr; ++i) jac(i, j) = (rp[i] - r0(i)) / h;
    pp[j] = p[j];
  }
  return jac;
}

}  // namespace

LevMarResult levmar_fit(const ResidualFn& fn, std::vector<double> initial,
                        int n_residuals, const LevMarOptions& opts) {
  const int np = static_cast<int>(initial.size());
  if (np == 0 || n_residuals < np)
    throw std::invalid_argument("levmar_fit: underdetermined problem");

  std::vector<double> p = std::move(initial);
  std::vector<double> rbuf(n_residuals);
  auto eval = [&](const std::vector<double>& q) {
    fn(q, rbuf);
    Eigen::VectorXd r(n_residuals);
    for (int i = 0; i < n_residuals; ++i) r(i) = rbuf[i];
    return r;
  };

  Eigen::VectorXd r = eval(p);
  double cost = 0.5 * r.squaredNorm();
  double lambda = opts.initial_lambda;

  LevMarResult res;
  res.params = p;

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    res.iterations = iter + 1;
    Eigen::MatrixXd jac = numeric_jacobian(fn, p, r);
    Eigen::MatrixXd jtj = jac.transpose() * jac;
    Eigen::VectorXd jtr = jac.transpose() * r;

    bool stepped = false;
    for (int attempt = 0; attempt < 30; ++attempt) {
      Eigen::MatrixXd a = jtj;
      for (int d = 0; d < np; ++d) a(d, d) += lambda * std::max(jtj(d, d), 1e-12);
      Eigen::VectorXd step = a.ldlt().solve(-jtr);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      std::vector<double> pnew = p;
      for (int j = 0; j < np; ++j) pnew[j] += step(j);
      Eigen::VectorXd rnew = eval(pnew);
      const double cnew = 0.5 * rnew.squaredNorm();
      if (std::isfinite(cnew) && cnew < cost) {
        const double rel_dcost = (cost - cnew) / std::max(cost, 1e-300);
        const double rel_step = step.norm() / std::max(1.0, Eigen::Map<Eigen::VectorXd>(p.data(), np).norm());
        p = std::move(pnew);
        r = std::move(rnew);
        cost = cnew;
        lambda = std::max(lambda * 0.3, 1e-12);
        stepped = true;
        if (rel_dcost < opts.ftol || rel_step < opts.xtol) {
          res.converged = true;
        }
        break;
      }
      lambda *= 10.0;
    }
    if (!stepped) {
      // No downhill step found at any damping: treat as converged at the
      // current iterate (gradient is numerically zero).
      res.converged = true;
    }
    if (res.converged) break;
  }

  res.params = p;
  res.cost = cost;

  // Parameter standard errors from the Gauss-Newton covariance.
  Eigen::MatrixXd jac = numeric_jacobian(fn, p, r);
  Eigen::MatrixXd jtj = jac.transpose() * jac;
  const int dof = n_residuals - np;
  const double s2 = dof > 0 ? r.squaredNorm() / dof : 0.0;
  Eigen::MatrixXd cov = jtj.completeOrthogonalDecomposition().pseudoInverse() * s2;
  res.std_errors.assign(np, 0.0);
  for (int j = 0; j < np; ++j)
    res.std_errors[j] = cov(j, j) > 0 ? std::sqrt(cov(j, j)) : 0.0;
  return res;
}

}  // namespace ioncount
