/*
Copyright 2026 The crandiag Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS-IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "crandiag/common.hpp"
#include "crandiag/matrix_kernels.hpp"

namespace crandiag {

enum class Order { kDescending, kAscending };

/// Nonnegative eigenvalue list carrying its sort order explicitly, since the
/// bounds below depend on how two spectra are paired.
class SpectrumVector {
 public:
  SpectrumVector() = default;

  static SpectrumVector sorted(std::vector<double> values, Order order) {
    for (double v : values)
      if (!std::isfinite(v)) throw InvalidInput("SpectrumVector: non-finite entry");
    if (order == Order::kDescending)
      std::sort(values.begin(), values.end(), std::greater<>());
    else
      std::sort(values.begin(), values.end());
    return SpectrumVector(std::move(values), order);
  }
  static SpectrumVector descending(std::vector<double> values) {
    return sorted(std::move(values), Order::kDescending);
  }
  static SpectrumVector ascending(std::vector<double> values) {
    return sorted(std::move(values), Order::kAscending);
  }
  static SpectrumVector of(const RealVector& v, Order order) {
    return sorted(std::vector<double>(v.begin(), v.end()), order);
  }

  const std::vector<double>& values() const { return values_; }
  Order order() const { return order_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  SpectrumVector as(Order order) const { return sorted(values_, order); }

 private:
  SpectrumVector(std::vector<double> v, Order o) : values_(std::move(v)), order_(o) {}
  std::vector<double> values_;
  Order order_ = Order::kDescending;
};

/// Elementwise product of two spectra in their declared orders.
inline std::vector<double> pairwise_product(const SpectrumVector& a, const SpectrumVector& b) {
  if (a.size() != b.size()) throw InvalidInput("pairwise_product: length mismatch");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

/// True iff `a` log-majorizes `b`: with both sorted descending, every prefix
/// product of a dominates that of b (relative tolerance tol) and the full
/// products agree within tol.
inline bool log_majorizes(const SpectrumVector& a, const SpectrumVector& b,
                          double tol = kTolerances.majorization) {
  if (a.size() != b.size()) throw InvalidInput("log_majorizes: length mismatch");
  const auto ad = a.as(Order::kDescending);
  const auto bd = b.as(Order::kDescending);
  for (std::size_t i = 0; i < ad.size(); ++i)
    if (ad[i] < 0.0 || bd[i] < 0.0) throw InvalidInput("log_majorizes: negative entry");
  double pa = 1.0, pb = 1.0;
  for (std::size_t k = 0; k < ad.size(); ++k) {
    pa *= ad[k];
    pb *= bd[k];
    if (k + 1 < ad.size() && pa < pb * (1.0 - tol)) return false;
  }
  return std::abs(pa - pb) <= tol * std::max(pa, pb);
}

/// Eigenvalues of A B for Hermitian PSD A, B (real and nonnegative; computed
/// from the Hermitian A^1/2 B A^1/2).
inline RealVector product_spectrum(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols())
    throw InvalidInput("product_spectrum: dimension mismatch");
  const HermitianEigen ea = hermitian_eigen(a);
  RealVector root = ea.values.cwiseMax(0.0).cwiseSqrt();
  const ComplexMatrix half = ea.vectors * root.cast<Complex>().asDiagonal() * ea.vectors.adjoint();
  return hermitian_eigenvalues(half * b * half).cwiseMax(0.0);
}

/// Two sides of one matrix inequality and whether it is attained.
struct BoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool equal = false;
};

/// Inputs of the uplink rate bound: Phi = H S H^H and the quantizer Q.
struct MajorizationProbe {
  ComplexMatrix phi;
  ComplexMatrix quantization;
  double sigma2 = 1.0;
};

namespace detail {
inline bool attained(double lhs, double rhs) {
  return std::abs(lhs - rhs) <= kTolerances.majorization * std::max(1.0, std::abs(rhs));
}
}  // namespace detail

/// lhs = log2 |I + Phi (Q + sigma^2 I)^-1|,
/// rhs = sum_i log2(1 + phi_i / (q_i + sigma^2)) with phi descending and q
/// ascending. lhs <= rhs, with equality when Q shares Phi's eigenbasis and
/// its smallest levels sit on Phi's strongest directions.
inline BoundCheck check_uplink_rate_bound(const MajorizationProbe& probe) {
  const auto n = probe.phi.rows();
  if (probe.phi.cols() != n || probe.quantization.rows() != n || probe.quantization.cols() != n)
    throw InvalidInput("check_uplink_rate_bound: dimension mismatch");
  if (!(probe.sigma2 > 0.0)) throw InvalidInput("check_uplink_rate_bound: sigma2 must be > 0");
  ComplexMatrix noise = probe.quantization;
  noise.diagonal().array() += probe.sigma2;
  BoundCheck out;
  out.lhs = log2det_hpd(noise + probe.phi) - log2det_hpd(noise);
  const auto phi = SpectrumVector::of(hermitian_eigenvalues(probe.phi).cwiseMax(0.0), Order::kDescending);
  const auto q = SpectrumVector::of(hermitian_eigenvalues(probe.quantization).cwiseMax(0.0), Order::kAscending);
  for (std::size_t i = 0; i < phi.size(); ++i) out.rhs += std::log2(1.0 + phi[i] / (q[i] + probe.sigma2));
  out.equal = detail::attained(out.lhs, out.rhs);
  return out;
}

/// Transmit power against its lower bound sum_d lambda_d(Phi) / h_d^2, with
/// Phi = H S H^H, both sorted descending. Terms with h_d = 0 contribute zero.
struct PowerBoundCheck {
  double trace = 0.0;
  double bound = 0.0;
  bool equal = false;
};

inline PowerBoundCheck check_power_lower_bound(const ComplexMatrix& h, const ComplexMatrix& s) {
  if (s.rows() != h.cols() || s.cols() != h.cols())
    throw InvalidInput("check_power_lower_bound: S must be N_U x N_U");
  const ChannelSpectrum spec = svd(h);
  const ComplexMatrix phi = h * s * h.adjoint();
  const auto lam = SpectrumVector::of(hermitian_eigenvalues(phi).cwiseMax(0.0), Order::kDescending);
  PowerBoundCheck out;
  out.trace = trace_real(s);
  const double scale = std::max(1.0, lam.size() ? lam[0] : 0.0);
  for (std::size_t d = 0; d < lam.size(); ++d) {
    const auto di = static_cast<Eigen::Index>(d);
    const double hd = di < spec.rank ? spec.singular_values(di) : 0.0;
    if (hd > 0.0) {
      out.bound += lam[d] / (hd * hd);
    } else if (lam[d] > 1e-9 * scale) {
      throw DomainError("check_power_lower_bound: Phi has energy on a zero-gain subchannel");
    }
  }
  out.equal = detail::attained(out.trace, out.bound);
  return out;
}

enum class DownlinkBound { kSignal, kQuantizer };

/// Downlink determinant bounds with G = H H^H (N_R x N_R):
///   signal:    log2 |M G + sigma^2 I| <= sum_i log2(m_i g_i + sigma^2), m descending
///   quantizer: log2 |G M + sigma^2 I| >= sum_i log2(g_i m_i + sigma^2), m ascending
/// with g descending in both. Equality holds when M's eigenbasis is U_H.
inline BoundCheck check_downlink_bounds(const ComplexMatrix& h, const ComplexMatrix& m, DownlinkBound which,
                                        double sigma2) {
  const auto nr = h.rows();
  if (m.rows() != nr || m.cols() != nr) throw InvalidInput("check_downlink_bounds: M must be N_R x N_R");
  if (!(sigma2 > 0.0)) throw InvalidInput("check_downlink_bounds: sigma2 must be > 0");
  const ComplexMatrix g = h * h.adjoint();
  BoundCheck out;
  for (double v : product_spectrum(m, g)) out.lhs += std::log2(v + sigma2);
  const auto gains = SpectrumVector::of(hermitian_eigenvalues(g).cwiseMax(0.0), Order::kDescending);
  const auto levels = SpectrumVector::of(hermitian_eigenvalues(m).cwiseMax(0.0),
                                         which == DownlinkBound::kSignal ? Order::kDescending : Order::kAscending);
  for (double v : pairwise_product(levels, gains)) out.rhs += std::log2(v + sigma2);
  out.equal = detail::attained(out.lhs, out.rhs);
  return out;
}

/// Monotonicity of f(x) = sum_i log2(sigma^2 + x_i) along log-majorization:
/// requires x to log-majorize y and returns f(x) >= f(y) - 1e-12.
inline bool schur_geo_convexity_probe(const SpectrumVector& x, const SpectrumVector& y, double sigma2) {
  if (!log_majorizes(x, y)) throw InvalidInput("schur_geo_convexity_probe: x does not log-majorize y");
  double fx = 0.0, fy = 0.0;
  for (double v : x.values()) fx += std::log2(sigma2 + v);
  for (double v : y.values()) fy += std::log2(sigma2 + v);
  return fx >= fy - 1e-12;
}

}  // namespace crandiag
