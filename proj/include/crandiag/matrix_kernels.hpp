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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "crandiag/common.hpp"

namespace crandiag {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

/// Full SVD of a channel matrix H = U diag(h) V^H.
///
/// `singular_values` has min(N_R, N_U) entries in descending order. `rank`
/// counts those above the numerical-rank threshold; trailing zeros are kept
/// so that subchannel indexing stays aligned with the bases.
struct ChannelSpectrum {
  RealVector singular_values;
  ComplexMatrix left_basis;   // N_R x N_R
  ComplexMatrix right_basis;  // N_U x N_U
  Eigen::Index rank = 0;

  Eigen::Index subchannels() const { return singular_values.size(); }
  Eigen::Index receive_dim() const { return left_basis.rows(); }
  Eigen::Index transmit_dim() const { return right_basis.rows(); }
};

/// Eigen-pairs of a Hermitian matrix, eigenvalues ascending.
struct HermitianEigen {
  RealVector values;
  ComplexMatrix vectors;
};

inline bool all_finite(const ComplexMatrix& m) {
  return m.allFinite();
}

inline double max_abs(const ComplexMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline ComplexMatrix hermitian_part(const ComplexMatrix& m) {
  return (m + m.adjoint()) * 0.5;
}

inline HermitianEigen hermitian_eigen(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) throw InvalidInput("hermitian_eigen: matrix is not square");
  if (m.rows() == 0) return {RealVector(0), ComplexMatrix(0, 0)};
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(m));
  if (es.info() != Eigen::Success) throw DomainError("hermitian_eigen: no convergence");
  return {es.eigenvalues(), es.eigenvectors()};
}

inline RealVector hermitian_eigenvalues(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) throw InvalidInput("hermitian_eigenvalues: matrix is not square");
  if (m.rows() == 0) return RealVector(0);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(m), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw DomainError("hermitian_eigenvalues: no convergence");
  return es.eigenvalues();
}

inline ChannelSpectrum svd(const ComplexMatrix& h) {
  if (h.size() == 0) throw InvalidInput("svd: empty matrix");
  if (!all_finite(h)) throw InvalidInput("svd: non-finite entry");
  Eigen::JacobiSVD<ComplexMatrix> solver(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  ChannelSpectrum out;
  out.singular_values = solver.singularValues();  // already descending
  out.left_basis = solver.matrixU();
  out.right_basis = solver.matrixV();
  const double top = out.singular_values.size() ? out.singular_values(0) : 0.0;
  const double threshold = top * 1e-12 * static_cast<double>(std::max(h.rows(), h.cols()));
  out.rank = 0;
  for (Eigen::Index i = 0; i < out.singular_values.size(); ++i) {
    if (out.singular_values(i) > threshold && out.singular_values(i) > 0.0) ++out.rank;
  }
  // Zero out numerically-dead singular values so h_d = 0 is exact.
  for (Eigen::Index i = out.rank; i < out.singular_values.size(); ++i) out.singular_values(i) = 0.0;
  return out;
}

/// Natural log-determinant of a Hermitian positive definite matrix.
/// The empty matrix has log-determinant 0.
inline double logdet_hpd(const ComplexMatrix& m, const Tolerances& tol = kTolerances) {
  if (m.rows() != m.cols()) throw InvalidInput("logdet_hpd: matrix is not square");
  if (m.rows() == 0) return 0.0;
  if (!all_finite(m)) throw InvalidInput("logdet_hpd: non-finite entry");
  const ComplexMatrix herm = hermitian_part(m);
  Eigen::LLT<ComplexMatrix> llt(herm);
  bool need_eigen = llt.info() != Eigen::Success;
  double sum = 0.0;
  if (!need_eigen) {
    const auto diag = llt.matrixLLT().diagonal().real();
    // Each pivot L_ii^2 bounds the smallest eigenvalue from above, so small
    // pivots are resolved exactly through the spectrum.
    if ((diag.array().square() <= tol.min_eigenvalue).any()) {
      need_eigen = true;
    } else {
      sum = 2.0 * diag.array().log().sum();
    }
  }
  if (need_eigen) {
    const RealVector ev = hermitian_eigenvalues(herm);
    if (ev.minCoeff() <= tol.min_eigenvalue) {
      throw DomainError("logdet_hpd: matrix is singular or indefinite (min eigenvalue " +
                        std::to_string(ev.minCoeff()) + ")");
    }
    sum = ev.array().log().sum();
  }
  return sum;
}

inline double log2det_hpd(const ComplexMatrix& m, const Tolerances& tol = kTolerances) {
  return logdet_hpd(m, tol) / std::numbers::ln2;
}

/// True iff m is Hermitian within tol (relative to max(1, |m|_max)) and its
/// smallest eigenvalue is >= -tol * max(1, largest eigenvalue).
inline bool is_psd(const ComplexMatrix& m, double tol) {
  if (m.rows() != m.cols()) throw InvalidInput("is_psd: matrix is not square");
  if (m.rows() == 0) return true;
  if (!all_finite(m)) return false;
  const double scale = std::max(1.0, max_abs(m));
  if (max_abs(m - m.adjoint()) > tol * scale) return false;
  const RealVector ev = hermitian_eigenvalues(m);
  return ev.minCoeff() >= -tol * std::max(1.0, ev.maxCoeff());
}

// Repo-wide random source: std::mt19937_64 seeded with the 64-bit seed,
// uniforms from the top 53 bits, normals by Box-Muller. Fully specified so
// generated instances are reproducible on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// Circularly-symmetric complex Gaussian with E|z|^2 = 1.
  Complex complex_normal() {
    const double re = normal();
    const double im = normal();
    return {re * std::numbers::sqrt2 / 2.0, im * std::numbers::sqrt2 / 2.0};
  }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline ComplexMatrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  ComplexMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.complex_normal();
  return m;
}

inline ComplexMatrix random_channel(Eigen::Index n_r, Eigen::Index n_u, std::uint64_t seed) {
  if (n_r < 1 || n_u < 1) throw InvalidInput("random_channel: dimensions must be >= 1");
  Rng rng(seed);
  return gaussian_matrix(n_r, n_u, rng);
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the phases
/// of diag(R) moved into Q.
inline ComplexMatrix random_unitary(Eigen::Index n, Rng& rng) {
  if (n < 1) throw InvalidInput("random_unitary: n must be >= 1");
  const ComplexMatrix a = gaussian_matrix(n, n, rng);
  Eigen::HouseholderQR<ComplexMatrix> qr(a);
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double mag = std::abs(r(j, j));
    const Complex phase = mag > 0.0 ? r(j, j) / mag : Complex(1.0, 0.0);
    q.col(j) *= phase;
  }
  return q;
}

inline ComplexMatrix random_unitary(Eigen::Index n, std::uint64_t seed) {
  if (n < 1) throw InvalidInput("random_unitary: n must be >= 1");
  Rng rng(seed);
  return random_unitary(n, rng);
}

/// exp(i K) for Hermitian K; unitary by construction.
inline ComplexMatrix unitary_exp(const ComplexMatrix& k) {
  const HermitianEigen es = hermitian_eigen(k);
  Eigen::VectorXcd phases(es.values.size());
  for (Eigen::Index i = 0; i < es.values.size(); ++i)
    phases(i) = std::polar(1.0, es.values(i));
  return es.vectors * phases.asDiagonal() * es.vectors.adjoint();
}

/// Random unitary at geodesic distance `step` (spectral norm of the
/// generator) from the identity.
inline ComplexMatrix near_identity_unitary(Eigen::Index n, double step, Rng& rng) {
  const ComplexMatrix g = gaussian_matrix(n, n, rng);
  ComplexMatrix k = hermitian_part(g);
  const RealVector ev = hermitian_eigenvalues(k);
  const double norm = ev.size() ? ev.cwiseAbs().maxCoeff() : 0.0;
  if (norm > 0.0) k *= step / norm;
  return unitary_exp(k);
}

/// Random Hermitian PSD matrix A A^H with A square complex Gaussian.
inline ComplexMatrix random_psd(Eigen::Index n, Rng& rng) {
  const ComplexMatrix a = gaussian_matrix(n, n, rng);
  return a * a.adjoint();
}

/// U diag(values) U^H, padding values with zeros up to U's width.
inline ComplexMatrix conjugate_diagonal(const ComplexMatrix& u, std::span<const double> values) {
  RealVector d = RealVector::Zero(u.cols());
  const auto n = std::min<Eigen::Index>(u.cols(), static_cast<Eigen::Index>(values.size()));
  for (Eigen::Index i = 0; i < n; ++i) d(i) = values[static_cast<std::size_t>(i)];
  return u * d.cast<Complex>().asDiagonal() * u.adjoint();
}

inline double trace_real(const ComplexMatrix& m) {
  return m.trace().real();
}

}  // namespace crandiag
