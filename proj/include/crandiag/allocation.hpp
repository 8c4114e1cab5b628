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
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "crandiag/common.hpp"
#include "crandiag/instance.hpp"
#include "crandiag/matrix_kernels.hpp"

namespace crandiag {

/// Rate of one compress-and-forward subchannel with received signal power
/// s = h^2 p and fronthaul share c bits under a tight quantizer:
/// log2((s + sigma^2) / (sigma^2 + 2^-c s)).
inline double subchannel_rate(double s, double c, double sigma2) {
  if (s <= 0.0 || c <= 0.0) return 0.0;
  if (std::isinf(c)) return std::log1p(s / sigma2) / std::numbers::ln2;
  const double a = std::exp2(-c);
  const double one_minus_a = -std::expm1(-c * std::numbers::ln2);
  return std::log1p(one_minus_a * s / (sigma2 + a * s)) / std::numbers::ln2;
}

/// Uplink quantizer level that spends exactly c bits of fronthaul:
/// q = (h^2 p + sigma^2) / (2^c - 1).
inline double tight_quantizer_uplink(double h2, double p, double c, double sigma2) {
  if (!(c > 0.0)) throw DomainError("tight_quantizer_uplink: c must be > 0 (q would be infinite)");
  if (std::isinf(c)) return 0.0;
  return (h2 * p + sigma2) / std::expm1(c * std::numbers::ln2);
}

struct DownlinkSplit {
  double quantizer = 0.0;     // q = x 2^-c
  double signal_power = 0.0;  // p~ = x (1 - 2^-c)
};

/// Splits a downlink subchannel's total power x so that the compression
/// consumes exactly c bits.
inline DownlinkSplit tight_quantizer_downlink(double x, double c) {
  if (!(c > 0.0)) throw DomainError("tight_quantizer_downlink: c must be > 0");
  if (!(x >= 0.0)) throw InvalidInput("tight_quantizer_downlink: x must be >= 0");
  if (std::isinf(c)) return {0.0, x};
  return {x * std::exp2(-c), -x * std::expm1(-c * std::numbers::ln2)};
}

struct SolverOptions {
  int grid_resolution = 101;
  int multistart = 8;
  int max_iterations = 5000;
  double convergence_tol = 1e-12;
  double c_max = 60.0;
  std::uint64_t seed = 0;
};

struct SolverTrace {
  int iterations = 0;
  int starts = 0;
  double objective = 0.0;
};

struct WaterfillingResult {
  std::vector<double> powers;
  double capacity = 0.0;
};

/// Classic water-filling over the parallel channels h_d (no fronthaul limit).
inline WaterfillingResult waterfilling_capacity(std::span<const double> gains, double power,
                                                double sigma2) {
  if (!(power >= 0.0)) throw InvalidInput("waterfilling_capacity: P must be >= 0");
  if (!(sigma2 > 0.0)) throw InvalidInput("waterfilling_capacity: sigma2 must be > 0");
  const std::size_t n = gains.size();
  WaterfillingResult out{std::vector<double>(n, 0.0), 0.0};
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(gains[a]) > std::abs(gains[b]); });
  std::size_t active = 0;
  double floor_sum = 0.0;
  double level = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double g = gains[order[k]] * gains[order[k]];
    if (g <= 0.0) break;
    const double cand = (power + floor_sum + sigma2 / g) / static_cast<double>(k + 1);
    if (cand <= sigma2 / g) break;
    floor_sum += sigma2 / g;
    level = cand;
    active = k + 1;
  }
  if (active == 0 || power == 0.0) return out;
  for (std::size_t k = 0; k < active; ++k) {
    const std::size_t i = order[k];
    const double g = gains[i] * gains[i];
    out.powers[i] = std::max(0.0, level - sigma2 / g);
    out.capacity += std::log2(1.0 + g * out.powers[i] / sigma2);
  }
  return out;
}

/// Builds a direction-specific allocation from per-subchannel totals x_d and
/// fronthaul shares c_d using tight quantizers.
///
/// Uplink subchannels with c_d = 0 get q_d = +inf (not forwarded). Downlink
/// subchannels with x_d = 0 are switched off (p~ = q = 0); a downlink
/// subchannel with x_d > 0 and c_d = 0 sends pure compression noise (q = x).
inline SubchannelAllocation tight_allocation(Direction direction, std::span<const double> gains,
                                             std::span<const double> totals,
                                             std::span<const double> shares, double sigma2) {
  const std::size_t n = gains.size();
  if (totals.size() != n || shares.size() != n)
    throw InvalidInput("tight_allocation: length mismatch");
  SubchannelAllocation a;
  a.direction = direction;
  a.power.assign(totals.begin(), totals.end());
  a.fronthaul_share.assign(shares.begin(), shares.end());
  a.quantizer.assign(n, 0.0);
  if (direction == Direction::kDownlink) a.signal_power.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = totals[i];
    const double c = shares[i];
    if (x < 0.0 || c < 0.0) throw InvalidInput("tight_allocation: negative entry");
    if (direction == Direction::kUplink) {
      a.quantizer[i] = c > 0.0 ? tight_quantizer_uplink(gains[i] * gains[i], x, c, sigma2)
                               : std::numeric_limits<double>::infinity();
    } else if (x > 0.0) {
      if (c > 0.0) {
        const auto split = tight_quantizer_downlink(x, c);
        a.quantizer[i] = split.quantizer;
        a.signal_power[i] = split.signal_power;
      } else {
        a.quantizer[i] = x;
      }
    }
  }
  return a;
}

/// Scalar-form objective of an allocation, using the direction's own
/// per-subchannel SINR expression.
inline double allocation_rate(const SubchannelAllocation& a, std::span<const double> gains,
                              double sigma2) {
  if (a.size() != gains.size() || a.quantizer.size() != gains.size())
    throw InvalidInput("allocation_rate: length mismatch");
  double bits = 0.0;
  for (std::size_t i = 0; i < gains.size(); ++i) {
    const double g = gains[i] * gains[i];
    if (a.direction == Direction::kUplink) {
      const double q = a.quantizer[i];
      if (std::isinf(q)) continue;
      bits += std::log1p(g * a.power[i] / (q + sigma2));
    } else {
      bits += std::log1p(g * a.signal_power[i] / (g * a.quantizer[i] + sigma2));
    }
  }
  return bits / std::numbers::ln2;
}

/// Checks the allocation invariants against the budgets.
inline bool within_budgets(const SubchannelAllocation& a, double power, double fronthaul,
                           double tol = kTolerances.feasibility) {
  for (double v : a.power) if (!(v >= 0.0)) return false;
  for (double v : a.fronthaul_share) if (!(v >= 0.0)) return false;
  return sum(a.power) <= power + tol && sum(a.fronthaul_share) <= fronthaul + tol;
}

namespace detail {

struct ScalarProblem {
  std::vector<double> gain2;  // h_d^2
  double power = 0.0;
  double fronthaul = 0.0;
  double sigma2 = 1.0;
  double c_max = 60.0;

  std::size_t size() const { return gain2.size(); }

  double objective(const std::vector<double>& x, const std::vector<double>& c) const {
    double r = 0.0;
    for (std::size_t i = 0; i < size(); ++i) r += subchannel_rate(gain2[i] * x[i], c[i], sigma2);
    return r;
  }
};

// Optimal fronthaul split for fixed received powers s_d. The objective is
// separable and concave in c; stationarity gives
//   c_d = clip(log2(s_d / sigma^2) + L, 0, c_max)
// for a common level L fixed by the budget.
inline std::vector<double> best_fronthaul(const ScalarProblem& pb, const std::vector<double>& x) {
  const std::size_t n = pb.size();
  std::vector<double> c(n, 0.0);
  std::vector<double> level(n, 0.0);
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = pb.gain2[i] * x[i];
    if (s > 0.0) {
      active.push_back(i);
      level[i] = std::log2(s / pb.sigma2);
    }
  }
  if (active.empty() || pb.fronthaul <= 0.0) return c;
  if (pb.fronthaul >= pb.c_max * static_cast<double>(active.size())) {
    for (auto i : active) c[i] = pb.c_max;
    return c;
  }
  auto total = [&](double l) {
    double t = 0.0;
    for (auto i : active) t += std::clamp(level[i] + l, 0.0, pb.c_max);
    return t;
  };
  // total(lo) = 0 and total(hi) = k c_max bracket the budget.
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (auto i : active) {
    lo = std::min(lo, -level[i] - 1.0);
    hi = std::max(hi, pb.c_max - level[i]);
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (total(mid) < pb.fronthaul ? lo : hi) = mid;
  }
  // Solve exactly on the identified free set.
  double l = 0.5 * (lo + hi);
  double fixed = 0.0;
  double free_levels = 0.0;
  int free_count = 0;
  for (auto i : active) {
    const double v = level[i] + l;
    if (v >= pb.c_max) {
      fixed += pb.c_max;
    } else if (v > 0.0) {
      free_levels += level[i];
      ++free_count;
    }
  }
  if (free_count > 0) {
    const double exact = (pb.fronthaul - fixed - free_levels) / free_count;
    if (std::abs(exact - l) < 1e-6) l = exact;
  }
  double t = 0.0;
  for (auto i : active) {
    c[i] = std::clamp(level[i] + l, 0.0, pb.c_max);
    t += c[i];
  }
  if (t > pb.fronthaul && t > 0.0) {
    for (auto i : active) c[i] *= pb.fronthaul / t;
  }
  return c;
}

// Optimal power split for fixed fronthaul shares. With a = 2^-c and
// u = h^2 x, the marginal rate h^2 sigma^2 (1 - a) / ((u + sigma^2)(sigma^2 + a u))
// equals a common multiplier lambda, which is a quadratic in u.
inline std::vector<double> best_power(const ScalarProblem& pb, const std::vector<double>& c) {
  const std::size_t n = pb.size();
  std::vector<double> x(n, 0.0);
  std::vector<std::size_t> eligible;
  double lambda_hi = 0.0;
  const double s2 = pb.sigma2;
  for (std::size_t i = 0; i < n; ++i) {
    if (pb.gain2[i] > 0.0 && c[i] > 0.0) {
      eligible.push_back(i);
      const double w = -std::expm1(-c[i] * std::numbers::ln2);
      lambda_hi = std::max(lambda_hi, pb.gain2[i] * w / s2);
    }
  }
  if (eligible.empty() || pb.power <= 0.0) return x;
  auto fill = [&](double log_lambda, std::vector<double>& out) {
    const double lambda = std::exp(log_lambda);
    double t = 0.0;
    for (auto i : eligible) {
      const double g = pb.gain2[i];
      const double a = std::isinf(c[i]) ? 0.0 : std::exp2(-c[i]);
      const double w = -std::expm1(-c[i] * std::numbers::ln2);
      const double k = g * s2 * w / lambda;
      double u = 0.0;
      if (k > s2 * s2) {
        const double b = s2 * (1.0 + a);
        u = 2.0 * (k - s2 * s2) / (b + std::sqrt(b * b + 4.0 * a * (k - s2 * s2)));
      }
      out[i] = u / g;
      t += out[i];
    }
    return t;
  };
  const double hi0 = std::log(lambda_hi);
  double hi = hi0;
  double lo = hi0 - 1.0;
  std::vector<double> tmp(n, 0.0);
  while (fill(lo, tmp) < pb.power) {
    hi = lo;
    lo -= 2.0 * (hi0 - lo) + 1.0;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (fill(mid, tmp) > pb.power ? lo : hi) = mid;
  }
  const double t = fill(lo, x);
  if (t > 0.0) {
    for (auto i : eligible) x[i] *= pb.power / t;
  }
  return x;
}

struct Candidate {
  std::vector<double> x;
  std::vector<double> c;
  double value = -1.0;
};

inline bool better(const Candidate& a, const Candidate& b) {
  const double scale = std::max(1.0, std::abs(b.value));
  if (a.value > b.value + 1e-12 * scale) return true;
  if (a.value < b.value - 1e-12 * scale) return false;
  return a.x < b.x;
}

// Block ascent: alternate the exact fronthaul and power sub-solutions until the
// objective stalls.
inline int alternate(const ScalarProblem& pb, Candidate& cand, int max_iterations, double tol) {
  int it = 0;
  double prev = -1.0;
  for (; it < max_iterations; ++it) {
    cand.c = best_fronthaul(pb, cand.x);
    cand.x = best_power(pb, cand.c);
    cand.value = pb.objective(cand.x, cand.c);
    if (cand.value - prev <= tol * std::max(1.0, std::abs(cand.value))) break;
    prev = cand.value;
  }
  // best_power may have dropped a subchannel; its bits go back to the rest.
  cand.c = best_fronthaul(pb, cand.x);
  cand.value = pb.objective(cand.x, cand.c);
  return it + 1;
}

// Pairwise pattern search on (x, c), moving budget between two subchannels in
// either or both coordinates with a shrinking step.
inline bool pattern_polish(const ScalarProblem& pb, Candidate& cand) {
  const std::size_t n = pb.size();
  if (n < 2) return false;
  bool improved_any = false;
  double step_x = pb.power / 4.0;
  double step_c = std::min(pb.fronthaul, pb.c_max) / 4.0;
  const double min_x = pb.power * 1e-13;
  const double min_c = std::max(pb.fronthaul, 1.0) * 1e-13;
  while (step_x > min_x || step_c > min_c) {
    bool improved = false;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        for (int mode = 0; mode < 3; ++mode) {
          const double dx = (mode != 1) ? std::min(step_x, cand.x[j]) : 0.0;
          const double dc = (mode != 0) ? std::min(step_c, cand.c[j]) : 0.0;
          if (dx <= 0.0 && dc <= 0.0) continue;
          if (cand.c[i] + dc > pb.c_max) continue;
          Candidate trial = cand;
          trial.x[i] += dx;
          trial.x[j] -= dx;
          trial.c[i] += dc;
          trial.c[j] -= dc;
          trial.value = pb.objective(trial.x, trial.c);
          if (trial.value > cand.value + 1e-15 * std::max(1.0, cand.value)) {
            cand = std::move(trial);
            improved = true;
          }
        }
      }
    }
    if (!improved) {
      step_x *= 0.5;
      step_c *= 0.5;
    } else {
      improved_any = true;
    }
  }
  return improved_any;
}

}  // namespace detail

/// Maximizes the sum of subchannel rates over per-subchannel powers and
/// fronthaul shares, subject to sum(power) <= P and sum(c) <= C with
/// c_d <= opts.c_max, and returns the allocation with tight quantizers for
/// `direction`.
///
/// The problem is not jointly concave. Each start (water-filling over the
/// strongest k subchannels for every k, plus opts.multistart random points)
/// is driven by exact block ascent and pairwise pattern search; the best
/// objective wins, ties going to the lexicographically smallest power vector.
inline SubchannelAllocation solve_scalar_allocation(std::span<const double> gains, double power,
                                                    double fronthaul, double sigma2,
                                                    Direction direction,
                                                    const SolverOptions& opts = {},
                                                    SolverTrace* trace = nullptr) {
  if (gains.empty()) throw InvalidInput("solve_scalar_allocation: no subchannels");
  if (!(power >= 0.0) || !(fronthaul >= 0.0) || !(sigma2 > 0.0))
    throw InvalidInput("solve_scalar_allocation: budgets must be >= 0 and sigma2 > 0");
  if (!(opts.c_max > 0.0) || opts.max_iterations < 1 || opts.multistart < 0)
    throw InvalidInput("solve_scalar_allocation: invalid solver options");
  const std::size_t n = gains.size();
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (std::abs(gains[i]) < std::abs(gains[i + 1]))
      throw InvalidInput("solve_scalar_allocation: gains must be sorted descending");

  detail::ScalarProblem pb;
  pb.gain2.resize(n);
  for (std::size_t i = 0; i < n; ++i) pb.gain2[i] = gains[i] * gains[i];
  pb.power = power;
  pb.fronthaul = fronthaul;
  pb.sigma2 = sigma2;
  pb.c_max = opts.c_max;

  std::size_t live = 0;
  while (live < n && pb.gain2[live] > 0.0) ++live;

  detail::Candidate best{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0.0};
  SolverTrace local;
  if (live > 0 && power > 0.0 && fronthaul > 0.0) {
    std::vector<std::vector<double>> starts;
    for (std::size_t k = 1; k <= live; ++k) {
      std::vector<double> g(gains.begin(), gains.begin() + static_cast<std::ptrdiff_t>(k));
      auto wf = waterfilling_capacity(g, power, sigma2);
      wf.powers.resize(n, 0.0);
      starts.push_back(std::move(wf.powers));
      std::vector<double> even(n, 0.0);
      for (std::size_t i = 0; i < k; ++i) even[i] = power / static_cast<double>(k);
      starts.push_back(std::move(even));
    }
    Rng rng(opts.seed);
    for (int s = 0; s < opts.multistart; ++s) {
      std::vector<double> x(n, 0.0);
      double t = 0.0;
      for (std::size_t i = 0; i < live; ++i) {
        x[i] = -std::log(1.0 - rng.uniform());
        t += x[i];
      }
      for (auto& v : x) v *= power / t;
      starts.push_back(std::move(x));
    }
    bool first = true;
    for (auto& x0 : starts) {
      detail::Candidate cand{std::move(x0), std::vector<double>(n, 0.0), 0.0};
      local.iterations += detail::alternate(pb, cand, opts.max_iterations, opts.convergence_tol);
      for (int round = 0; round < 20; ++round) {
        if (!detail::pattern_polish(pb, cand)) break;
        local.iterations += detail::alternate(pb, cand, opts.max_iterations, opts.convergence_tol);
      }
      ++local.starts;
      if (first || detail::better(cand, best)) best = std::move(cand);
      first = false;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (best.c[i] <= 0.0) best.x[i] = 0.0;
      if (best.x[i] <= 0.0) best.c[i] = 0.0;
    }
    best.value = pb.objective(best.x, best.c);
  }
  local.objective = best.value;
  if (trace) *trace = local;
  return tight_allocation(direction, gains, best.x, best.c, sigma2);
}

/// Maps an uplink allocation to a downlink one with the same per-subchannel
/// total power and fronthaul share; with tight quantizers the per-subchannel
/// rates coincide.
inline SubchannelAllocation uplink_to_downlink(const SubchannelAllocation& a) {
  if (a.direction != Direction::kUplink) throw InvalidInput("uplink_to_downlink: allocation is not uplink");
  const std::size_t n = a.size();
  if (a.fronthaul_share.size() != n) throw InvalidInput("uplink_to_downlink: length mismatch");
  SubchannelAllocation d;
  d.direction = Direction::kDownlink;
  d.power = a.power;
  d.fronthaul_share = a.fronthaul_share;
  d.quantizer.assign(n, 0.0);
  d.signal_power.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = a.power[i];
    const double c = a.fronthaul_share[i];
    if (x < 0.0 || c < 0.0) throw InvalidInput("uplink_to_downlink: negative entry");
    if (x == 0.0) continue;
    if (c > 0.0) {
      const auto split = tight_quantizer_downlink(x, c);
      d.quantizer[i] = split.quantizer;
      d.signal_power[i] = split.signal_power;
    } else {
      d.quantizer[i] = x;
    }
  }
  return d;
}

/// Same allocation with every subchannel's total power scaled by `factor`
/// and quantizers re-tightened to the unchanged fronthaul shares.
inline SubchannelAllocation scale_power(const SubchannelAllocation& a, std::span<const double> gains,
                                        double sigma2, double factor) {
  if (!(factor >= 0.0)) throw InvalidInput("scale_power: factor must be >= 0");
  std::vector<double> x = a.power;
  for (auto& v : x) v *= factor;
  return tight_allocation(a.direction, gains, x, a.fronthaul_share, sigma2);
}

}  // namespace crandiag
