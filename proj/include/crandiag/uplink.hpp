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

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "crandiag/instance.hpp"
#include "crandiag/matrix_kernels.hpp"

namespace crandiag {

/// Uplink covariance pair. The user transmits with covariance `transmit`
/// (N_U x N_U); the RRH quantizes with noise covariance `quantization`
/// (N_R x N_R).
///
/// When `receive_basis` (N_R x k, orthonormal columns) is set, the RRH only
/// forwards the projection of its received signal onto that subspace and all
/// determinants are taken there. Receive dimensions outside it behave as if
/// quantized with infinite noise and consume no fronthaul.
struct UplinkDesign {
  ComplexMatrix transmit;
  ComplexMatrix quantization;
  std::optional<ComplexMatrix> receive_basis;
};

namespace detail {

inline void check_uplink_shapes(const ChannelInstance& inst, const UplinkDesign& d) {
  const auto nr = inst.receive_antennas();
  const auto nu = inst.user_antennas();
  if (d.transmit.rows() != nu || d.transmit.cols() != nu)
    throw InvalidInput("uplink design: transmit covariance must be N_U x N_U");
  if (d.quantization.rows() != nr || d.quantization.cols() != nr)
    throw InvalidInput("uplink design: quantization covariance must be N_R x N_R");
  if (d.receive_basis && d.receive_basis->rows() != nr)
    throw InvalidInput("uplink design: receive basis must have N_R rows");
  if (!is_psd(d.transmit, kTolerances.psd))
    throw InvalidInput("uplink design: transmit covariance is not Hermitian PSD");
  if (!is_psd(d.quantization, kTolerances.psd))
    throw InvalidInput("uplink design: quantization covariance is not Hermitian PSD");
}

// Received covariance H S H^H + sigma^2 I and quantizer covariance, both
// restricted to the forwarded subspace.
struct UplinkBlocks {
  ComplexMatrix received;
  ComplexMatrix quantization;
};

inline UplinkBlocks uplink_blocks(const ChannelInstance& inst, const UplinkDesign& d) {
  ComplexMatrix received = inst.channel * d.transmit * inst.channel.adjoint();
  received.diagonal().array() += inst.noise_variance;
  if (!d.receive_basis) return {std::move(received), d.quantization};
  const ComplexMatrix& b = *d.receive_basis;
  return {b.adjoint() * received * b, b.adjoint() * d.quantization * b};
}

}  // namespace detail

/// log2 |H S H^H + Q + sigma^2 I| - log2 |Q + sigma^2 I|, clamped at 0.
inline double uplink_rate(const ChannelInstance& inst, const UplinkDesign& d) {
  detail::check_uplink_shapes(inst, d);
  const auto blocks = detail::uplink_blocks(inst, d);
  if (blocks.received.rows() == 0) return 0.0;
  ComplexMatrix noise = blocks.quantization;
  noise.diagonal().array() += inst.noise_variance;
  const double r = log2det_hpd(blocks.received + blocks.quantization) - log2det_hpd(noise);
  return clamp_nonnegative(r);
}

/// log2 |H S H^H + Q + sigma^2 I| - log2 |Q|. Throws DomainError when Q is
/// singular on the forwarded subspace.
inline double uplink_fronthaul(const ChannelInstance& inst, const UplinkDesign& d) {
  detail::check_uplink_shapes(inst, d);
  const auto blocks = detail::uplink_blocks(inst, d);
  if (blocks.received.rows() == 0) return 0.0;
  double q_logdet = 0.0;
  try {
    q_logdet = log2det_hpd(blocks.quantization);
  } catch (const DomainError&) {
    throw DomainError("uplink fronthaul: quantization covariance is singular, fronthaul is infinite");
  }
  return clamp_nonnegative(log2det_hpd(blocks.received + blocks.quantization) - q_logdet);
}

/// S = V diag(p) V^H and Q = U diag(q) U^H. Subchannels with q_d = +inf are
/// left out of the receive basis, as are the receive dimensions beyond
/// min(N_R, N_U).
inline UplinkDesign assemble_uplink(const ChannelSpectrum& spec, const SubchannelAllocation& alloc) {
  const auto n = static_cast<std::size_t>(spec.subchannels());
  if (alloc.power.size() != n || alloc.quantizer.size() != n)
    throw InvalidInput("assemble_uplink: allocation length must equal the number of subchannels");
  std::vector<double> finite_q(n, 0.0);
  std::vector<Eigen::Index> active;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = alloc.power[i];
    const double q = alloc.quantizer[i];
    if (!(p >= 0.0) || !std::isfinite(p)) throw InvalidInput("assemble_uplink: power must be finite and >= 0");
    if (!(q >= 0.0)) throw InvalidInput("assemble_uplink: quantizer level must be >= 0");
    if (std::isfinite(q)) {
      finite_q[i] = q;
      active.push_back(static_cast<Eigen::Index>(i));
    }
  }
  UplinkDesign d;
  d.transmit = conjugate_diagonal(spec.right_basis, alloc.power);
  d.quantization = conjugate_diagonal(spec.left_basis, finite_q);
  ComplexMatrix basis(spec.receive_dim(), static_cast<Eigen::Index>(active.size()));
  for (std::size_t k = 0; k < active.size(); ++k)
    basis.col(static_cast<Eigen::Index>(k)) = spec.left_basis.col(active[k]);
  d.receive_basis = std::move(basis);
  return d;
}

/// Evaluates a design against the (P1) budgets. A singular quantizer shows
/// up as infinite fronthaul and an infeasible report, not as an exception.
inline RateReport check_feasible_p1(const ChannelInstance& inst, const UplinkDesign& d,
                                    double tol = kTolerances.feasibility) {
  validate(inst);
  RateReport r;
  r.power_used = trace_real(d.transmit);
  try {
    r.fronthaul_used = uplink_fronthaul(inst, d);
    r.rate = uplink_rate(inst, d);
  } catch (const DomainError&) {
    r.fronthaul_used = std::numeric_limits<double>::infinity();
    r.rate = uplink_rate(inst, d);
  }
  r.power_slack = inst.power_budget - r.power_used;
  r.fronthaul_slack = inst.fronthaul_capacity - r.fronthaul_used;
  r.feasible = r.power_slack >= -tol && r.fronthaul_slack >= -tol;
  return r;
}

}  // namespace crandiag
