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

/// Downlink covariance pair at the RRH: `signal` is the precoded-signal
/// covariance S~ and `quantization` the compression noise covariance Q, both
/// N_R x N_R. The RRH transmits S = S~ + Q over the channel H^H.
///
/// When `transmit_basis` (N_R x k) is set, the CP only compresses the signal
/// within that subspace; S~ and Q must both live inside it, and the
/// fronthaul determinants are taken there.
struct DownlinkDesign {
  ComplexMatrix signal;
  ComplexMatrix quantization;
  std::optional<ComplexMatrix> transmit_basis;
};

namespace detail {

inline void check_downlink_shapes(const DownlinkDesign& d, Eigen::Index nr) {
  if (d.signal.rows() != nr || d.signal.cols() != nr)
    throw InvalidInput("downlink design: signal covariance must be N_R x N_R");
  if (d.quantization.rows() != nr || d.quantization.cols() != nr)
    throw InvalidInput("downlink design: quantization covariance must be N_R x N_R");
  if (d.transmit_basis && d.transmit_basis->rows() != nr)
    throw InvalidInput("downlink design: transmit basis must have N_R rows");
  if (!is_psd(d.signal, kTolerances.psd))
    throw InvalidInput("downlink design: signal covariance is not Hermitian PSD");
  if (!is_psd(d.quantization, kTolerances.psd))
    throw InvalidInput("downlink design: quantization covariance is not Hermitian PSD");
}

inline bool supported_in(const ComplexMatrix& m, const ComplexMatrix& basis) {
  const ComplexMatrix proj = basis * basis.adjoint();
  const ComplexMatrix inside = proj * m * proj;
  return max_abs(m - inside) <= 1e-9 * std::max(1.0, max_abs(m));
}

struct DownlinkBlocks {
  ComplexMatrix signal;
  ComplexMatrix quantization;
};

inline DownlinkBlocks downlink_blocks(const DownlinkDesign& d) {
  if (!d.transmit_basis) return {d.signal, d.quantization};
  const ComplexMatrix& b = *d.transmit_basis;
  if (!supported_in(d.signal, b) || !supported_in(d.quantization, b))
    throw InvalidInput("downlink design: covariance has energy outside the transmit basis");
  return {b.adjoint() * d.signal * b, b.adjoint() * d.quantization * b};
}

}  // namespace detail

/// log2 |H^H (S~ + Q) H + sigma^2 I| - log2 |H^H Q H + sigma^2 I|.
inline double downlink_rate(const ChannelInstance& inst, const DownlinkDesign& d) {
  detail::check_downlink_shapes(d, inst.receive_antennas());
  const ComplexMatrix& h = inst.channel;
  ComplexMatrix total = h.adjoint() * (d.signal + d.quantization) * h;
  ComplexMatrix noise = h.adjoint() * d.quantization * h;
  total.diagonal().array() += inst.noise_variance;
  noise.diagonal().array() += inst.noise_variance;
  return clamp_nonnegative(log2det_hpd(total) - log2det_hpd(noise));
}

/// log2 |S~ + Q| - log2 |Q| on the compressed subspace. Throws DomainError
/// when Q is singular there.
inline double downlink_fronthaul(const DownlinkDesign& d) {
  detail::check_downlink_shapes(d, d.signal.rows());
  const auto blocks = detail::downlink_blocks(d);
  if (blocks.signal.rows() == 0) return 0.0;
  double q_logdet = 0.0;
  try {
    q_logdet = log2det_hpd(blocks.quantization);
  } catch (const DomainError&) {
    throw DomainError("downlink fronthaul: compression covariance is singular, fronthaul is infinite");
  }
  return clamp_nonnegative(log2det_hpd(blocks.signal + blocks.quantization) - q_logdet);
}

/// Same quantity as downlink_fronthaul through the whitened form
/// log2 |I + L^-1 S~ L^-H| with Q = L L^H.
inline double downlink_fronthaul_whitened(const DownlinkDesign& d) {
  const auto blocks = detail::downlink_blocks(d);
  if (blocks.signal.rows() == 0) return 0.0;
  Eigen::LLT<ComplexMatrix> llt(hermitian_part(blocks.quantization));
  if (llt.info() != Eigen::Success) throw DomainError("downlink fronthaul: compression covariance is singular");
  const ComplexMatrix l_inv = llt.matrixL().solve(
      ComplexMatrix::Identity(blocks.signal.rows(), blocks.signal.rows()));
  const RealVector ev = hermitian_eigenvalues(l_inv * blocks.signal * l_inv.adjoint());
  double bits = 0.0;
  for (double v : ev) bits += std::log2(1.0 + std::max(v, 0.0));
  return bits;
}

/// S~ = U diag(p~) U^H and Q = U diag(q) U^H. Subchannels with q_d = 0 are
/// left out of the transmit basis; they must carry no signal.
inline DownlinkDesign assemble_downlink(const ChannelSpectrum& spec, const SubchannelAllocation& alloc) {
  const auto n = static_cast<std::size_t>(spec.subchannels());
  if (alloc.signal_power.size() != n || alloc.quantizer.size() != n)
    throw InvalidInput("assemble_downlink: allocation length must equal the number of subchannels");
  std::vector<Eigen::Index> active;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = alloc.signal_power[i];
    const double q = alloc.quantizer[i];
    if (!(p >= 0.0) || !std::isfinite(p)) throw InvalidInput("assemble_downlink: signal power must be finite and >= 0");
    if (!(q >= 0.0) || !std::isfinite(q)) throw InvalidInput("assemble_downlink: quantizer level must be finite and >= 0");
    if (q == 0.0 && p > 0.0)
      throw InvalidInput("assemble_downlink: subchannel " + std::to_string(i) +
                         " carries signal with zero compression noise (infinite fronthaul)");
    if (q > 0.0) active.push_back(static_cast<Eigen::Index>(i));
  }
  DownlinkDesign d;
  d.signal = conjugate_diagonal(spec.left_basis, alloc.signal_power);
  d.quantization = conjugate_diagonal(spec.left_basis, alloc.quantizer);
  ComplexMatrix basis(spec.receive_dim(), static_cast<Eigen::Index>(active.size()));
  for (std::size_t k = 0; k < active.size(); ++k)
    basis.col(static_cast<Eigen::Index>(k)) = spec.left_basis.col(active[k]);
  d.transmit_basis = std::move(basis);
  return d;
}

/// Evaluates a design against the (P2) budgets; transmit power counts both
/// signal and compression noise.
inline RateReport check_feasible_p2(const ChannelInstance& inst, const DownlinkDesign& d,
                                    double tol = kTolerances.feasibility) {
  validate(inst);
  RateReport r;
  r.rate = downlink_rate(inst, d);
  r.power_used = trace_real(d.signal) + trace_real(d.quantization);
  try {
    r.fronthaul_used = downlink_fronthaul(d);
    r.reduced_form_gap = std::abs(r.fronthaul_used - downlink_fronthaul_whitened(d));
  } catch (const DomainError&) {
    r.fronthaul_used = std::numeric_limits<double>::infinity();
    r.reduced_form_gap = 0.0;
  }
  r.power_slack = inst.power_budget - r.power_used;
  r.fronthaul_slack = inst.fronthaul_capacity - r.fronthaul_used;
  r.feasible = r.power_slack >= -tol && r.fronthaul_slack >= -tol;
  return r;
}

}  // namespace crandiag
