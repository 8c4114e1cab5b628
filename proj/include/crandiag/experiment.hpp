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

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "crandiag/allocation.hpp"
#include "crandiag/common.hpp"
#include "crandiag/downlink.hpp"
#include "crandiag/instance.hpp"
#include "crandiag/matrix_kernels.hpp"
#include "crandiag/oracle.hpp"
#include "crandiag/uplink.hpp"

namespace crandiag {

// ---------------------------------------------------------------------------
// Instance files
//
//   {"n_r": 2, "n_u": 2, "H": [[[re, im], [re, im]], ...], "P": 2, "C": 2, "sigma2": 1}
//
// A file holds one such object or an array of them.

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& obj, const char* field, const std::string& where) {
  auto it = obj.find(field);
  if (it == obj.end()) throw ParseError(where + ": missing field \"" + field + "\"");
  return *it;
}

inline double require_number(const nlohmann::json& obj, const char* field, const std::string& where) {
  const auto& v = require(obj, field, where);
  if (!v.is_number()) throw ParseError(where + ": field \"" + field + "\" must be a number");
  return v.get<double>();
}

inline std::int64_t require_count(const nlohmann::json& obj, const char* field, const std::string& where) {
  const auto& v = require(obj, field, where);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 1)
    throw ParseError(where + ": field \"" + field + "\" must be a positive integer");
  return v.get<std::int64_t>();
}

}  // namespace detail

inline ChannelInstance instance_from_json(const nlohmann::json& j, const std::string& where = "instance") {
  if (!j.is_object()) throw ParseError(where + ": expected a JSON object");
  const auto n_r = detail::require_count(j, "n_r", where);
  const auto n_u = detail::require_count(j, "n_u", where);
  const auto& rows = detail::require(j, "H", where);
  if (!rows.is_array() || static_cast<std::int64_t>(rows.size()) != n_r)
    throw ParseError(where + ": H must be an array of n_r = " + std::to_string(n_r) + " rows");
  ChannelInstance inst;
  inst.channel.resize(n_r, n_u);
  for (std::int64_t r = 0; r < n_r; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<std::int64_t>(row.size()) != n_u)
      throw ParseError(where + ": H row " + std::to_string(r) + " has " +
                       std::to_string(row.is_array() ? row.size() : 0) + " entries, expected n_u = " +
                       std::to_string(n_u));
    for (std::int64_t c = 0; c < n_u; ++c) {
      const auto& e = row[static_cast<std::size_t>(c)];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
        throw ParseError(where + ": H[" + std::to_string(r) + "][" + std::to_string(c) +
                         "] must be a two-element [re, im] array");
      inst.channel(r, c) = Complex(e[0].get<double>(), e[1].get<double>());
    }
  }
  inst.power_budget = detail::require_number(j, "P", where);
  inst.fronthaul_capacity = detail::require_number(j, "C", where);
  inst.noise_variance = detail::require_number(j, "sigma2", where);
  validate(inst);
  return inst;
}

inline nlohmann::json instance_to_json(const ChannelInstance& inst) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < inst.channel.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < inst.channel.cols(); ++c)
      row.push_back({inst.channel(r, c).real(), inst.channel(r, c).imag()});
    rows.push_back(std::move(row));
  }
  return {{"n_r", inst.channel.rows()}, {"n_u", inst.channel.cols()}, {"H", std::move(rows)},
          {"P", inst.power_budget},     {"C", inst.fronthaul_capacity}, {"sigma2", inst.noise_variance}};
}

inline std::vector<ChannelInstance> load_instances(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open instance file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  std::vector<ChannelInstance> out;
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i)
      out.push_back(instance_from_json(j[i], path + " [" + std::to_string(i) + "]"));
  } else {
    out.push_back(instance_from_json(j, path));
  }
  return out;
}

/// Reads a file holding exactly one instance.
inline ChannelInstance parse_instance(const std::string& path) {
  auto all = load_instances(path);
  if (all.size() != 1) throw ParseError(path + ": expected a single instance, found " + std::to_string(all.size()));
  return std::move(all.front());
}

inline void write_instance(const std::string& path, const ChannelInstance& inst) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write instance file '" + path + "'");
  out << instance_to_json(inst).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Experiments

enum class Mode { kSolve, kSweep, kDuality, kCertify, kOracle };

inline Mode mode_from_string(const std::string& s) {
  if (s == "solve") return Mode::kSolve;
  if (s == "sweep") return Mode::kSweep;
  if (s == "duality") return Mode::kDuality;
  if (s == "certify") return Mode::kCertify;
  if (s == "oracle") return Mode::kOracle;
  throw InvalidInput("unknown mode '" + s + "'");
}

enum class OutputFormat { kCsv, kJson };

struct RandomInstances {
  int n_r = 2;
  int n_u = 2;
  int count = 1;
};

struct ExperimentConfig {
  Mode mode = Mode::kSolve;
  std::optional<std::string> instances_path;
  std::optional<RandomInstances> random;
  std::uint64_t seed = 1;
  // Budgets applied to every instance; empty means "use the instance's own".
  std::vector<double> power_grid;
  std::vector<double> fronthaul_grid;
  // Budgets of generated instances when no grid is given.
  double random_power = 1.0;
  double random_fronthaul = 2.0;
  double random_sigma2 = 1.0;
  int trials = 1000;
  std::optional<double> tol;
  bool plant_half_power = false;  // certify mode: search from a 50%-power base
  SolverOptions solver;
  OutputFormat format = OutputFormat::kCsv;
};

struct ResultRow {
  std::int64_t instance_id = 0;
  std::string direction;
  double power = 0.0;
  double fronthaul = 0.0;
  double rate = 0.0;
  double fronthaul_used = 0.0;
  double power_used = 0.0;
  int iterations = 0;
  std::optional<double> margin;
  double wall_ms = 0.0;
  bool passed = true;
};

struct RunResult {
  std::vector<ResultRow> rows;
  int exit_status = 0;
};

/// Parses "a:b:steps" into `steps` evenly spaced points from a to b.
inline std::vector<double> parse_grid(const std::string& text) {
  double a = 0.0, b = 0.0;
  long steps = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%lf:%lf:%ld%c", &a, &b, &steps, &tail) != 3 || steps < 1)
    throw InvalidInput("grid '" + text + "' must have the form a:b:steps with steps >= 1");
  std::vector<double> out;
  for (long i = 0; i < steps; ++i) out.push_back(steps == 1 ? a : a + (b - a) * static_cast<double>(i) / (steps - 1));
  return out;
}

/// Parses "n_r,n_u,count".
inline RandomInstances parse_random_spec(const std::string& text) {
  RandomInstances r;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%d,%d,%d%c", &r.n_r, &r.n_u, &r.count, &tail) != 3 || r.n_r < 1 || r.n_u < 1 ||
      r.count < 1)
    throw InvalidInput("random spec '" + text + "' must have the form n_r,n_u,count with positive entries");
  return r;
}

/// Diagonal-structure solution of one direction: solved scalar allocation,
/// the assembled covariances, and their feasibility report.
struct DirectionSolution {
  SubchannelAllocation allocation;
  std::optional<UplinkDesign> uplink;
  std::optional<DownlinkDesign> downlink;
  RateReport report;
  SolverTrace trace;
};

inline std::vector<double> gains_of(const ChannelSpectrum& spec) {
  return {spec.singular_values.begin(), spec.singular_values.end()};
}

inline DirectionSolution solve_direction(const ChannelInstance& inst, const ChannelSpectrum& spec,
                                         Direction direction, const SolverOptions& opts,
                                         double power_factor = 1.0) {
  const auto gains = gains_of(spec);
  DirectionSolution out;
  out.allocation = solve_scalar_allocation(gains, inst.power_budget, inst.fronthaul_capacity,
                                           inst.noise_variance, direction, opts, &out.trace);
  if (power_factor != 1.0) out.allocation = scale_power(out.allocation, gains, inst.noise_variance, power_factor);
  if (direction == Direction::kUplink) {
    out.uplink = assemble_uplink(spec, out.allocation);
    out.report = check_feasible_p1(inst, *out.uplink);
  } else {
    out.downlink = assemble_downlink(spec, out.allocation);
    out.report = check_feasible_p2(inst, *out.downlink);
  }
  return out;
}

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (a + 1) + 0xBF58476D1CE4E5B9ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace detail

inline std::vector<ChannelInstance> experiment_instances(const ExperimentConfig& cfg) {
  if (cfg.instances_path.has_value() == cfg.random.has_value())
    throw InvalidInput("exactly one instance source (--instances or --random) is required");
  if (cfg.instances_path) return load_instances(*cfg.instances_path);
  std::vector<ChannelInstance> out;
  for (int k = 0; k < cfg.random->count; ++k) {
    ChannelInstance inst;
    inst.channel = random_channel(cfg.random->n_r, cfg.random->n_u, cfg.seed + static_cast<std::uint64_t>(k));
    inst.power_budget = cfg.random_power;
    inst.fronthaul_capacity = cfg.random_fronthaul;
    inst.noise_variance = cfg.random_sigma2;
    out.push_back(std::move(inst));
  }
  return out;
}

/// Runs one experiment. Rows are ordered by instance, then direction, then
/// power index, then fronthaul index. The exit status is nonzero iff a
/// feasibility check, duality check, oracle comparison or certification
/// verdict failed.
inline RunResult run(const ExperimentConfig& cfg) {
  const auto instances = experiment_instances(cfg);
  if (cfg.mode == Mode::kSweep && cfg.power_grid.empty() && cfg.fronthaul_grid.empty())
    throw InvalidInput("sweep mode requires --P-grid and/or --C-grid");
  if (cfg.trials < 0) throw InvalidInput("trials must be >= 0");

  const double tol = cfg.tol.value_or(cfg.mode == Mode::kCertify  ? kTolerances.certification
                                      : cfg.mode == Mode::kDuality ? 1e-5
                                      : cfg.mode == Mode::kOracle  ? 1e-3
                                                                   : kTolerances.feasibility);
  RunResult result;
  const Direction directions[] = {Direction::kUplink, Direction::kDownlink};

  for (std::size_t id = 0; id < instances.size(); ++id) {
    const ChannelInstance& base = instances[id];
    const ChannelSpectrum spec = svd(base.channel);
    const std::vector<double> ps = cfg.power_grid.empty() ? std::vector<double>{base.power_budget} : cfg.power_grid;
    const std::vector<double> cs =
        cfg.fronthaul_grid.empty() ? std::vector<double>{base.fronthaul_capacity} : cfg.fronthaul_grid;

    auto make_row = [&](const ChannelInstance& inst, std::string dir) {
      ResultRow row;
      row.instance_id = static_cast<std::int64_t>(id);
      row.direction = std::move(dir);
      row.power = inst.power_budget;
      row.fronthaul = inst.fronthaul_capacity;
      return row;
    };

    if (cfg.mode == Mode::kDuality) {
      for (double p : ps)
        for (double c : cs) {
          ChannelInstance inst = base;
          inst.power_budget = p;
          inst.fronthaul_capacity = c;
          validate(inst);
          const auto start = std::chrono::steady_clock::now();
          const auto ul = solve_direction(inst, spec, Direction::kUplink, cfg.solver);
          const auto dl = solve_direction(inst, spec, Direction::kDownlink, cfg.solver);
          ResultRow row = make_row(inst, "duality");
          row.rate = ul.report.rate;
          row.fronthaul_used = ul.report.fronthaul_used;
          row.power_used = ul.report.power_used;
          row.iterations = ul.trace.iterations + dl.trace.iterations;
          row.margin = std::abs(ul.report.rate - dl.report.rate);
          row.passed = ul.report.feasible && dl.report.feasible && *row.margin <= tol;
          row.wall_ms = detail::elapsed_ms(start);
          result.rows.push_back(std::move(row));
        }
      continue;
    }

    for (Direction dir : directions) {
      for (std::size_t pi = 0; pi < ps.size(); ++pi)
        for (std::size_t ci = 0; ci < cs.size(); ++ci) {
          ChannelInstance inst = base;
          inst.power_budget = ps[pi];
          inst.fronthaul_capacity = cs[ci];
          validate(inst);
          const auto start = std::chrono::steady_clock::now();
          ResultRow row = make_row(inst, std::string(to_string(dir)));
          if (cfg.mode == Mode::kSolve || cfg.mode == Mode::kSweep) {
            const auto sol = solve_direction(inst, spec, dir, cfg.solver);
            row.rate = sol.report.rate;
            row.fronthaul_used = sol.report.fronthaul_used;
            row.power_used = sol.report.power_used;
            row.iterations = sol.trace.iterations;
            row.passed = sol.report.feasible;
          } else if (cfg.mode == Mode::kCertify) {
            const auto sol = solve_direction(inst, spec, dir, cfg.solver, cfg.plant_half_power ? 0.5 : 1.0);
            const std::uint64_t seed = detail::mix_seed(cfg.seed, id, pi * cs.size() + ci + (dir == Direction::kDownlink ? 1u << 20 : 0u));
            CertificationReport rep = sol.uplink ? perturbation_search(inst, *sol.uplink, cfg.trials, seed, tol)
                                                 : perturbation_search(inst, *sol.downlink, cfg.trials, seed, tol);
            rep.instance_id = static_cast<std::int64_t>(id);
            row.rate = rep.diagonal_rate;
            row.fronthaul_used = sol.report.fronthaul_used;
            row.power_used = sol.report.power_used;
            row.iterations = rep.trials;
            row.margin = rep.margin;
            row.passed = sol.report.feasible && rep.verdict;
          } else {  // oracle
            const auto sol = solve_direction(inst, spec, dir, cfg.solver);
            const auto gains = gains_of(spec);
            const auto grid = grid_oracle_scalar(gains, inst.power_budget, inst.fronthaul_capacity,
                                                 inst.noise_variance, dir, cfg.solver.grid_resolution,
                                                 cfg.solver.c_max);
            const double solved = allocation_rate(sol.allocation, gains, inst.noise_variance);
            row.rate = sol.report.rate;
            row.fronthaul_used = sol.report.fronthaul_used;
            row.power_used = sol.report.power_used;
            row.iterations = sol.trace.iterations;
            row.margin = solved - allocation_rate(grid, gains, inst.noise_variance);
            row.passed = sol.report.feasible && *row.margin >= -tol;
          }
          row.wall_ms = detail::elapsed_ms(start);
          result.rows.push_back(std::move(row));
        }
    }
  }
  for (const auto& row : result.rows)
    if (!row.passed) result.exit_status = 1;
  return result;
}

// ---------------------------------------------------------------------------
// Result files

inline constexpr const char* kCsvHeader =
    "instance_id,direction,P,C,rate_bits,fronthaul_bits,power_used,iterations,margin_bits,wall_ms";

namespace detail {
inline std::string fmt_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}
}  // namespace detail

inline void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.instance_id << ',' << r.direction << ',' << detail::fmt_number(r.power) << ','
        << detail::fmt_number(r.fronthaul) << ',' << detail::fmt_number(r.rate) << ','
        << detail::fmt_number(r.fronthaul_used) << ',' << detail::fmt_number(r.power_used) << ',' << r.iterations
        << ',' << (r.margin ? detail::fmt_number(*r.margin) : std::string()) << ',';
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", r.wall_ms);
    out << buf << '\n';
  }
}

inline nlohmann::json rows_to_json(const std::vector<ResultRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"instance_id", r.instance_id},
                   {"direction", r.direction},
                   {"P", r.power},
                   {"C", r.fronthaul},
                   {"rate_bits", r.rate},
                   {"fronthaul_bits", r.fronthaul_used},
                   {"power_used", r.power_used},
                   {"iterations", r.iterations},
                   {"margin_bits", r.margin ? nlohmann::json(*r.margin) : nlohmann::json(nullptr)},
                   {"wall_ms", r.wall_ms}});
  }
  return arr;
}

inline void write_rows(std::ostream& out, const std::vector<ResultRow>& rows, OutputFormat format) {
  if (format == OutputFormat::kCsv)
    write_csv(out, rows);
  else
    out << rows_to_json(rows).dump(2) << '\n';
}

}  // namespace crandiag
