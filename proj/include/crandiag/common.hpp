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

#include <stdexcept>
#include <string>
#include <string_view>

namespace crandiag {

// Error hierarchy. Every throwing operation in the library uses one of these.
struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Mathematically undefined evaluation (singular matrix, infinite fronthaul).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct UnsupportedSize : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ProjectionFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical tolerances shared by all modules.
struct Tolerances {
  double hermitian = 1e-10;
  double psd = 1e-9;
  double reconstruction = 1e-8;
  double unitary = 1e-9;
  double feasibility = 1e-9;
  double majorization = 1e-9;
  double certification = 1e-6;
  // logdet_hpd rejects matrices whose smallest eigenvalue is below this.
  double min_eigenvalue = 1e-12;
};

inline constexpr Tolerances kTolerances{};

enum class Direction { kUplink, kDownlink };

inline std::string_view to_string(Direction d) {
  return d == Direction::kUplink ? "uplink" : "downlink";
}

inline Direction direction_from_string(std::string_view s) {
  if (s == "uplink") return Direction::kUplink;
  if (s == "downlink") return Direction::kDownlink;
  throw InvalidInput("unknown direction '" + std::string(s) + "'");
}

}  // namespace crandiag
