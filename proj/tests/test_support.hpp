// Independent reference computations used by the test suites. Nothing here
// calls into the library's solver or log-determinant paths.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "crandiag/matrix_kernels.hpp"

namespace crandiag::testing {

// Natural log-determinant through the general (non-Hermitian) eigensolver.
inline double logdet_by_eigenvalues(const ComplexMatrix& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::ComplexEigenSolver<ComplexMatrix> es(m);
  double s = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) s += std::log(std::abs(es.eigenvalues()(i)));
  return s;
}

inline double log2det_by_eigenvalues(const ComplexMatrix& m) {
  return logdet_by_eigenvalues(m) / std::log(2.0);
}

// Closed-form rate of one subchannel, written out directly.
inline double closed_form_rate(double h2, double p, double c, double sigma2) {
  return std::log2((h2 * p + sigma2) / (sigma2 + std::pow(2.0, -c) * h2 * p));
}

// Brute-force maximum of sum_d closed_form_rate over grids of the power and
// fronthaul simplexes (equality budgets), D in {1, 2, 3}.
inline double brute_force_scalar(const std::vector<double>& gains, double power, double fronthaul,
                                 double sigma2, int steps) {
  const std::size_t n = gains.size();
  double best = 0.0;
  auto rate = [&](std::size_t d, double x, double c) {
    return closed_form_rate(gains[d] * gains[d], x, c, sigma2);
  };
  if (n == 1) return rate(0, power, fronthaul);
  for (int i = 0; i <= steps; ++i)
    for (int j = 0; (n == 2 ? j == 0 : j <= steps - i); ++j)
      for (int a = 0; a <= steps; ++a)
        for (int b = 0; (n == 2 ? b == 0 : b <= steps - a); ++b) {
          const double x0 = power * i / steps, c0 = fronthaul * a / steps;
          double v = 0.0;
          if (n == 2) {
            v = rate(0, x0, c0) + rate(1, power - x0, fronthaul - c0);
          } else {
            const double x1 = power * j / steps, c1 = fronthaul * b / steps;
            v = rate(0, x0, c0) + rate(1, x1, c1) +
                rate(2, std::max(0.0, power - x0 - x1), std::max(0.0, fronthaul - c0 - c1));
          }
          best = std::max(best, v);
        }
  return best;
}

// Frobenius distance from unitarity.
inline double unitarity_error(const ComplexMatrix& u) {
  return (u.adjoint() * u - ComplexMatrix::Identity(u.cols(), u.cols())).norm();
}

inline ComplexMatrix diag_matrix(std::initializer_list<double> values) {
  Eigen::VectorXd d(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) d(i++) = v;
  return d.cast<std::complex<double>>().asDiagonal();
}

inline std::vector<double> sorted_gains(Rng& rng, std::size_t n, double scale = 2.0) {
  std::vector<double> g(n);
  for (auto& v : g) v = std::abs(rng.normal()) * scale + 1e-3;
  std::sort(g.begin(), g.end(), std::greater<>());
  return g;
}

}  // namespace crandiag::testing
