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
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "crandiag/allocation.hpp"
#include "crandiag/common.hpp"
#include "crandiag/downlink.hpp"
#include "crandiag/instance.hpp"
#include "crandiag/matrix_kernels.hpp"
#include "crandiag/uplink.hpp"

namespace crandiag {

/// Outcome of a randomized search for designs beating a base design.
struct CertificationReport {
  std::int64_t instance_id = 0;
  double diagonal_rate = 0.0;
  double best_perturbed_rate = 0.0;
  double margin = 0.0;  // diagonal_rate - best_perturbed_rate
  int trials = 0;
  int evaluated = 0;    // candidates that survived feasibility projection
  std::uint64_t seed = 0;
  bool verdict = true;
};

/// Exhaustive search over the budget simplexes
///   sum_d x_d = P on a grid of spacing P / (resolution - 1),
///   sum_d c_d = C on a grid of spacing C / (resolution - 1),
/// followed by a continuous pairwise refinement from the best grid point.
/// Cost grows as resolution^(2(D-1)); only D <= 3 is supported.
inline SubchannelAllocation grid_oracle_scalar(std::span<const double> gains, double power,
                                               double fronthaul, double sigma2, Direction direction,
                                               int resolution = 101, double c_max = 60.0) {
  const std::size_t n = gains.size();
  if (n == 0) throw InvalidInput("grid_oracle_scalar: no subchannels");
  if (n > 3) throw UnsupportedSize("grid_oracle_scalar: at most 3 subchannels supported");
  if (resolution < 2) throw InvalidInput("grid_oracle_scalar: resolution must be >= 2");
  if (!(power >= 0.0) || !(fronthaul >= 0.0) || !(sigma2 > 0.0))
    throw InvalidInput("grid_oracle_scalar: invalid budgets");

  const int steps = resolution - 1;
  const auto r = static_cast<std::size_t>(resolution);
  std::vector<double> xs(r), cs(r);
  for (int i = 0; i <= steps; ++i) {
    xs[static_cast<std::size_t>(i)] = power * i / steps;
    cs[static_cast<std::size_t>(i)] = std::min(fronthaul * i / steps, c_max);
  }
  // table[d][i * r + j] = rate of subchannel d at power xs[i], share cs[j].
  std::vector<std::vector<double>> table(n, std::vector<double>(r * r));
  for (std::size_t d = 0; d < n; ++d)
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < r; ++j)
        table[d][i * r + j] = subchannel_rate(gains[d] * gains[d] * xs[i], cs[j], sigma2);

  std::vector<int> best_i(n, 0), best_j(n, 0);
  double best = -1.0;
  auto consider = [&](const std::vector<int>& pi, const std::vector<int>& cj) {
    double v = 0.0;
    for (std::size_t d = 0; d < n; ++d)
      v += table[d][static_cast<std::size_t>(pi[d]) * r + static_cast<std::size_t>(cj[d])];
    if (v > best) {
      best = v;
      best_i = pi;
      best_j = cj;
    }
  };
  // All compositions of `steps` into n nonnegative parts.
  auto compositions = [&](auto&& visit) {
    std::vector<int> parts(n, 0);
    if (n == 1) {
      parts[0] = steps;
      visit(parts);
    } else if (n == 2) {
      for (int a = 0; a <= steps; ++a) {
        parts = {a, steps - a};
        visit(parts);
      }
    } else {
      for (int a = 0; a <= steps; ++a)
        for (int b = 0; a + b <= steps; ++b) {
          parts = {a, b, steps - a - b};
          visit(parts);
        }
    }
  };
  compositions([&](const std::vector<int>& pi) {
    const std::vector<int> pcopy = pi;
    compositions([&](const std::vector<int>& cj) { consider(pcopy, cj); });
  });

  std::vector<double> x(n), c(n);
  for (std::size_t d = 0; d < n; ++d) {
    x[d] = xs[static_cast<std::size_t>(best_i[d])];
    c[d] = cs[static_cast<std::size_t>(best_j[d])];
  }
  auto value = [&](const std::vector<double>& xv, const std::vector<double>& cv) {
    double v = 0.0;
    for (std::size_t d = 0; d < n; ++d) v += subchannel_rate(gains[d] * gains[d] * xv[d], cv[d], sigma2);
    return v;
  };
  // Local refinement: coordinate transfers between pairs, step halving from
  // the grid spacing.
  double cur = value(x, c);
  double hx = power / steps;
  double hc = fronthaul / steps;
  for (int level = 0; level < 60 && n > 1; ++level) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
          if (a == b) continue;
          for (int kind = 0; kind < 2; ++kind) {
            auto& v = kind == 0 ? x : c;
            const double h = std::min(kind == 0 ? hx : hc, v[b]);
            if (h <= 0.0) continue;
            if (kind == 1 && c[a] + h > c_max) continue;
            v[a] += h;
            v[b] -= h;
            const double trial = value(x, c);
            if (trial > cur) {
              cur = trial;
              moved = true;
            } else {
              v[a] -= h;
              v[b] += h;
            }
          }
        }
    }
    hx *= 0.5;
    hc *= 0.5;
  }
  for (std::size_t d = 0; d < n; ++d) {
    if (gains[d] == 0.0 || c[d] <= 0.0 || x[d] <= 0.0) {
      x[d] = 0.0;
      c[d] = 0.0;
    }
  }
  return tight_allocation(direction, gains, x, c, sigma2);
}

namespace detail {

// Largest t > 0 (to relative precision 1e-14) with fits(t) true, for fits
// true below some threshold and false above it.
template <class Pred>
double largest_fitting(Pred fits) {
  double lo = 1.0, hi = 1.0;
  if (fits(1.0)) {
    for (int i = 0; i < 2000 && fits(hi); ++i) hi *= 2.0;
    if (fits(hi)) return hi;
    lo = hi * 0.5;
  } else {
    for (int i = 0; i < 2000 && !fits(lo); ++i) lo *= 0.5;
    if (!fits(lo)) throw ProjectionFailure("feasibility projection: no feasible scaling found");
    hi = lo * 2.0;
  }
  for (int i = 0; i < 200 && hi / lo - 1.0 > 1e-14; ++i) {
    const double mid = std::sqrt(lo * hi);
    (fits(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace detail

/// Rescales an uplink covariance pair onto the budget boundary: S is scaled
/// to trace P, then Q is scaled by the smallest factor keeping the fronthaul
/// within C.
inline UplinkDesign feasibility_projection(const ChannelInstance& inst, const UplinkDesign& like) {
  validate(inst);
  if (!is_psd(like.transmit, kTolerances.psd) || !is_psd(like.quantization, kTolerances.psd))
    throw InvalidInput("feasibility_projection: inputs must be Hermitian PSD");
  UplinkDesign d = like;
  const double tr = trace_real(d.transmit);
  d.transmit = tr > 0.0 ? ComplexMatrix(d.transmit * (inst.power_budget / tr))
                        : ComplexMatrix::Zero(d.transmit.rows(), d.transmit.cols());
  const auto k = d.receive_basis ? d.receive_basis->cols() : d.quantization.rows();
  if (k == 0) return d;
  const ComplexMatrix qk = d.receive_basis
                               ? ComplexMatrix(d.receive_basis->adjoint() * d.quantization * *d.receive_basis)
                               : d.quantization;
  const RealVector ev = hermitian_eigenvalues(qk);
  if (ev.minCoeff() <= 1e-12 * std::max(1.0, ev.maxCoeff()))
    throw ProjectionFailure("feasibility_projection: quantization covariance is singular on the forwarded subspace");
  if (inst.fronthaul_capacity <= 0.0)
    throw ProjectionFailure("feasibility_projection: zero fronthaul cannot carry a forwarded dimension");
  const ComplexMatrix base_q = d.quantization;
  // Fronthaul falls as Q grows; search over t = 1 / beta.
  auto fits = [&](double t) {
    UplinkDesign trial = d;
    trial.quantization = base_q / t;
    return uplink_fronthaul(inst, trial) <= inst.fronthaul_capacity;
  };
  const double beta = 1.0 / detail::largest_fitting(fits);
  d.quantization = base_q * beta;
  return d;
}

/// Rescales a downlink pair: the signal-to-compression ratio is set so the
/// fronthaul is at most C, then the pair is scaled to total power P. With a
/// transmit basis both covariances are first projected into it.
inline DownlinkDesign feasibility_projection(const ChannelInstance& inst, const DownlinkDesign& like) {
  validate(inst);
  if (!is_psd(like.signal, kTolerances.psd) || !is_psd(like.quantization, kTolerances.psd))
    throw InvalidInput("feasibility_projection: inputs must be Hermitian PSD");
  DownlinkDesign d = like;
  if (d.transmit_basis) {
    const ComplexMatrix proj = *d.transmit_basis * d.transmit_basis->adjoint();
    d.signal = hermitian_part(proj * d.signal * proj);
    d.quantization = hermitian_part(proj * d.quantization * proj);
  }
  const auto k = d.transmit_basis ? d.transmit_basis->cols() : d.quantization.rows();
  if (k == 0) {
    d.signal.setZero();
    d.quantization.setZero();
    return d;
  }
  const ComplexMatrix qk = d.transmit_basis
                               ? ComplexMatrix(d.transmit_basis->adjoint() * d.quantization * *d.transmit_basis)
                               : d.quantization;
  const RealVector ev = hermitian_eigenvalues(qk);
  if (ev.minCoeff() <= 1e-12 * std::max(1.0, ev.maxCoeff()))
    throw ProjectionFailure("feasibility_projection: compression covariance is singular on the transmit subspace");
  double ratio = 0.0;
  if (trace_real(d.signal) > 0.0 && inst.fronthaul_capacity > 0.0) {
    const ComplexMatrix base_s = d.signal;
    // Fronthaul grows with the ratio; take the largest ratio that fits.
    auto fits = [&](double t) {
      DownlinkDesign trial = d;
      trial.signal = base_s * t;
      return downlink_fronthaul(trial) <= inst.fronthaul_capacity;
    };
    ratio = detail::largest_fitting(fits);
  }
  d.signal *= ratio;
  const double total = trace_real(d.signal) + trace_real(d.quantization);
  const double scale = total > 0.0 ? inst.power_budget / total : 0.0;
  d.signal *= scale;
  d.quantization *= scale;
  return d;
}

namespace detail {

inline constexpr double kGeodesicSteps[3] = {0.3, 0.1, 0.03};

// Random orthonormal basis of dimension k in C^n.
inline ComplexMatrix random_subspace(Eigen::Index n, Eigen::Index k, Rng& rng) {
  return random_unitary(n, rng).leftCols(k);
}

template <class Design, class Generate, class Evaluate>
CertificationReport search(const Design& base, double base_rate, int trials, std::uint64_t seed,
                           double tol, Generate&& generate, Evaluate&& evaluate) {
  CertificationReport rep;
  rep.diagonal_rate = base_rate;
  rep.trials = trials;
  rep.seed = seed;
  double best = -std::numeric_limits<double>::infinity();
  Rng rng(seed);
  for (int t = 0; t < trials; ++t) {
    Design cand = generate(t, rng);
    double rate = 0.0;
    try {
      if (!evaluate(cand, rate)) continue;
    } catch (const ProjectionFailure&) {
      continue;
    } catch (const DomainError&) {
      continue;
    }
    ++rep.evaluated;
    best = std::max(best, rate);
  }
  rep.best_perturbed_rate = rep.evaluated > 0 ? best : base_rate;
  rep.margin = rep.diagonal_rate - rep.best_perturbed_rate;
  rep.verdict = rep.margin >= -tol;
  (void)base;
  return rep;
}

}  // namespace detail

/// Tries to beat a feasible uplink design with nearby rotations of its
/// covariance factors (geodesic steps 0.3, 0.1, 0.03) and with random
/// covariances; every candidate is projected onto the budgets first.
inline CertificationReport perturbation_search(const ChannelInstance& inst, const UplinkDesign& base,
                                               int trials, std::uint64_t seed,
                                               double tol = kTolerances.certification) {
  if (trials < 0) throw InvalidInput("perturbation_search: trials must be >= 0");
  const RateReport base_report = check_feasible_p1(inst, base);
  if (!base_report.feasible) throw InvalidInput("perturbation_search: base design is infeasible");
  const auto nr = inst.receive_antennas();
  const auto nu = inst.user_antennas();
  const auto forwarded = base.receive_basis ? base.receive_basis->cols() : nr;
  auto generate = [&](int t, Rng& rng) {
    UplinkDesign cand = base;
    const int kind = t % 5;
    if (kind < 3) {
      const double step = detail::kGeodesicSteps[kind];
      const int which = static_cast<int>(rng.next_u64() % 3);  // 0 both, 1 transmit, 2 quantizer
      if (which != 2) {
        const ComplexMatrix w = near_identity_unitary(nu, step, rng);
        cand.transmit = hermitian_part(w * base.transmit * w.adjoint());
      }
      if (which != 1) {
        const ComplexMatrix w = near_identity_unitary(nr, step, rng);
        cand.quantization = hermitian_part(w * base.quantization * w.adjoint());
        if (cand.receive_basis) cand.receive_basis = ComplexMatrix(w * *base.receive_basis);
      }
    } else if (kind == 3) {
      cand.transmit = random_psd(nu, rng);
      cand.quantization = random_psd(nr, rng);
      cand.receive_basis.reset();
    } else {
      const auto k = std::max<Eigen::Index>(1, forwarded);
      const ComplexMatrix b = detail::random_subspace(nr, k, rng);
      cand.transmit = random_psd(nu, rng);
      cand.quantization = hermitian_part(b * random_psd(k, rng) * b.adjoint());
      cand.receive_basis = b;
    }
    return cand;
  };
  auto evaluate = [&](const UplinkDesign& cand, double& rate) {
    const UplinkDesign projected = feasibility_projection(inst, cand);
    const RateReport r = check_feasible_p1(inst, projected);
    if (!r.feasible) return false;
    rate = r.rate;
    return true;
  };
  return detail::search(base, base_report.rate, trials, seed, tol, generate, evaluate);
}

/// Downlink counterpart of the uplink search.
inline CertificationReport perturbation_search(const ChannelInstance& inst, const DownlinkDesign& base,
                                               int trials, std::uint64_t seed,
                                               double tol = kTolerances.certification) {
  if (trials < 0) throw InvalidInput("perturbation_search: trials must be >= 0");
  const RateReport base_report = check_feasible_p2(inst, base);
  if (!base_report.feasible) throw InvalidInput("perturbation_search: base design is infeasible");
  const auto nr = inst.receive_antennas();
  const auto used = base.transmit_basis ? base.transmit_basis->cols() : nr;
  auto generate = [&](int t, Rng& rng) {
    DownlinkDesign cand = base;
    const int kind = t % 5;
    if (kind < 3) {
      const double step = detail::kGeodesicSteps[kind];
      const int which = static_cast<int>(rng.next_u64() % 3);  // 0 joint, 1 signal, 2 quantizer
      const ComplexMatrix w = near_identity_unitary(nr, step, rng);
      if (which != 2) cand.signal = hermitian_part(w * base.signal * w.adjoint());
      if (which != 1) {
        cand.quantization = hermitian_part(w * base.quantization * w.adjoint());
        if (cand.transmit_basis) cand.transmit_basis = ComplexMatrix(w * *base.transmit_basis);
      }
    } else if (kind == 3) {
      cand.signal = random_psd(nr, rng);
      cand.quantization = random_psd(nr, rng);
      cand.transmit_basis.reset();
    } else {
      const auto k = std::max<Eigen::Index>(1, used);
      const ComplexMatrix b = detail::random_subspace(nr, k, rng);
      cand.signal = hermitian_part(b * random_psd(k, rng) * b.adjoint());
      cand.quantization = hermitian_part(b * random_psd(k, rng) * b.adjoint());
      cand.transmit_basis = b;
    }
    return cand;
  };
  auto evaluate = [&](const DownlinkDesign& cand, double& rate) {
    const DownlinkDesign projected = feasibility_projection(inst, cand);
    const RateReport r = check_feasible_p2(inst, projected);
    if (!r.feasible) return false;
    rate = r.rate;
    return true;
  };
  return detail::search(base, base_report.rate, trials, seed, tol, generate, evaluate);
}

}  // namespace crandiag
