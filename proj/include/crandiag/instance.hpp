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
#include <string>
#include <vector>

#include "crandiag/common.hpp"
#include "crandiag/matrix_kernels.hpp"

namespace crandiag {

/// Problem data shared by the uplink and downlink problems. The downlink
/// channel is the reciprocal H^H.
struct ChannelInstance {
  ComplexMatrix channel;          // H, N_R x N_U
  double power_budget = 0.0;      // P, linear units
  double fronthaul_capacity = 0.0;  // C, bits per channel use
  double noise_variance = 1.0;    // sigma^2

  Eigen::Index receive_antennas() const { return channel.rows(); }
  Eigen::Index user_antennas() const { return channel.cols(); }
};

inline void validate(const ChannelInstance& inst) {
  if (inst.channel.size() == 0) throw InvalidInput("channel matrix is empty");
  if (!all_finite(inst.channel)) throw InvalidInput("channel matrix has non-finite entries");
  if (!(inst.power_budget >= 0.0) || !std::isfinite(inst.power_budget))
    throw InvalidInput("power budget P must be finite and >= 0");
  if (!(inst.fronthaul_capacity >= 0.0) || std::isnan(inst.fronthaul_capacity))
    throw InvalidInput("fronthaul capacity C must be >= 0");
  if (!(inst.noise_variance > 0.0) || !std::isfinite(inst.noise_variance))
    throw InvalidInput("noise variance sigma2 must be finite and > 0");
}

/// Outcome of evaluating a design against the power and fronthaul budgets.
struct RateReport {
  double rate = 0.0;
  double fronthaul_used = 0.0;
  double power_used = 0.0;
  bool feasible = false;
  double power_slack = 0.0;      // P - power_used
  double fronthaul_slack = 0.0;  // C - fronthaul_used
  // Downlink only: |fronthaul via S = S~ + Q  -  fronthaul via whitening|.
  double reduced_form_gap = 0.0;
};

/// Per-subchannel scalar variables. All vectors have one entry per
/// subchannel of the channel spectrum.
///
/// Uplink: `power` holds p_d and `quantizer` holds q_d, with +inf marking a
/// subchannel whose receive dimension is not forwarded at all.
/// Downlink: `power` holds the total x_d = p~_d + q_d, split into
/// `signal_power` (p~_d) and `quantizer` (q_d); q_d = 0 marks an unused
/// subchannel.
struct SubchannelAllocation {
  Direction direction = Direction::kUplink;
  std::vector<double> power;
  std::vector<double> signal_power;
  std::vector<double> quantizer;
  std::vector<double> fronthaul_share;

  std::size_t size() const { return power.size(); }
};

inline double sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

inline double clamp_nonnegative(double x) { return x > 0.0 ? x : 0.0; }

}  // namespace crandiag
