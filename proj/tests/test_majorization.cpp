#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "crandiag/majorization.hpp"
#include "test_support.hpp"

namespace crandiag {
namespace {

using testing::diag_matrix;

// Eigenvalues of the non-Hermitian product A B from a general eigensolver.
std::vector<double> product_eigenvalues_general(const ComplexMatrix& a, const ComplexMatrix& b) {
  Eigen::ComplexEigenSolver<ComplexMatrix> es(a * b);
  std::vector<double> out;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) out.push_back(std::max(0.0, es.eigenvalues()(i).real()));
  return out;
}

std::vector<double> eig_vector(const ComplexMatrix& m) {
  const RealVector v = hermitian_eigenvalues(m).cwiseMax(0.0);
  return {v.begin(), v.end()};
}

TEST(SpectrumVector, SortsAndReorders) {
  const auto d = SpectrumVector::descending({1.0, 3.0, 2.0});
  EXPECT_EQ(d.values(), (std::vector<double>{3.0, 2.0, 1.0}));
  const auto a = d.as(Order::kAscending);
  EXPECT_EQ(a.values(), (std::vector<double>{1.0, 2.0, 3.0}));
  EXPECT_EQ(a.order(), Order::kAscending);
  EXPECT_EQ(pairwise_product(d, a), (std::vector<double>{3.0, 4.0, 3.0}));
  EXPECT_THROW(SpectrumVector::descending({1.0, NAN}), InvalidInput);
  EXPECT_THROW(pairwise_product(d, SpectrumVector::descending({1.0})), InvalidInput);
}

TEST(LogMajorizes, DefinitionExamples) {
  EXPECT_TRUE(log_majorizes(SpectrumVector::descending({4, 1}), SpectrumVector::descending({2, 2})));
  EXPECT_FALSE(log_majorizes(SpectrumVector::descending({2, 2}), SpectrumVector::descending({4, 1})));
  // Equal prefix but unequal totals.
  EXPECT_FALSE(log_majorizes(SpectrumVector::descending({4, 2}), SpectrumVector::descending({2, 2})));
  EXPECT_TRUE(log_majorizes(SpectrumVector::descending({3, 2, 1}), SpectrumVector::ascending({1, 2, 3})));
  EXPECT_TRUE(log_majorizes(SpectrumVector::descending({8, 1, 1}), SpectrumVector::descending({2, 2, 2})));
  EXPECT_THROW(log_majorizes(SpectrumVector::descending({1, 1}), SpectrumVector::descending({1})), InvalidInput);
  EXPECT_THROW(log_majorizes(SpectrumVector::descending({-1, -1}), SpectrumVector::descending({1, 1})), InvalidInput);
}

TEST(ProductSpectrum, MatchesGeneralEigensolver) {
  Rng rng(11);
  for (int t = 0; t < 200; ++t) {
    const Eigen::Index n = 1 + t % 4;
    const ComplexMatrix a = random_psd(n, rng), b = random_psd(n, rng);
    auto mine = SpectrumVector::of(product_spectrum(a, b), Order::kDescending).values();
    auto ref = SpectrumVector::descending(product_eigenvalues_general(a, b)).values();
    for (std::size_t i = 0; i < mine.size(); ++i) EXPECT_NEAR(mine[i], ref[i], 1e-9 * (1.0 + ref[0]));
  }
  EXPECT_THROW(product_spectrum(ComplexMatrix::Identity(2, 2), ComplexMatrix::Identity(3, 3)), InvalidInput);
}

TEST(ProductSpectrum, SandwichedByPairedSpectra) {
  // gamma(AB) is log-majorized by alpha(desc) * beta(desc) and log-majorizes
  // alpha(desc) * beta(asc).
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(seed);
    const Eigen::Index n = 2 + seed % 3;
    const ComplexMatrix a = random_psd(n, rng), b = random_psd(n, rng);
    const auto gamma = SpectrumVector::descending(product_eigenvalues_general(a, b));
    const auto alpha = SpectrumVector::descending(eig_vector(a));
    const auto beta = SpectrumVector::descending(eig_vector(b));
    const auto upper = SpectrumVector::descending(pairwise_product(alpha, beta));
    const auto lower = SpectrumVector::descending(pairwise_product(alpha, beta.as(Order::kAscending)));
    EXPECT_TRUE(log_majorizes(upper, gamma, 1e-7)) << "seed " << seed;
    EXPECT_TRUE(log_majorizes(gamma, lower, 1e-7)) << "seed " << seed;
  }
}

TEST(UplinkRateBound, HoldsOnRandomProbes) {
  Rng rng(12);
  for (int t = 0; t < 1000; ++t) {
    const Eigen::Index n = 1 + t % 4;
    MajorizationProbe probe{random_psd(n, rng), random_psd(n, rng), 0.5 + rng.uniform()};
    const auto b = check_uplink_rate_bound(probe);
    EXPECT_GE(b.rhs - b.lhs, -1e-9);
  }
}

TEST(UplinkRateBound, EqualityWithAscendingPairedQuantizer) {
  Rng rng(13);
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index n = 1 + t % 4;
    const ComplexMatrix phi = random_psd(n, rng);
    const HermitianEigen e = hermitian_eigen(phi);
    // Quantizer in Phi's eigenbasis with its levels reversed against Phi's.
    std::vector<double> q(n);
    for (auto& v : q) v = 2.0 * rng.uniform();
    std::vector<double> lv(e.values.begin(), e.values.end());
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto i, auto j) { return lv[i] > lv[j]; });
    std::sort(q.begin(), q.end());
    std::vector<double> placed(n);
    for (Eigen::Index k = 0; k < n; ++k) placed[idx[k]] = q[k];
    MajorizationProbe probe{phi, conjugate_diagonal(e.vectors, placed), 1.0};
    const auto b = check_uplink_rate_bound(probe);
    EXPECT_NEAR(b.lhs, b.rhs, 1e-9);
    EXPECT_TRUE(b.equal);
  }
}

TEST(UplinkRateBound, SameOrderPairingIsStrict) {
  // Q = Phi puts the largest quantizer level on the strongest direction.
  MajorizationProbe probe{diag_matrix({3.0, 1.0}), diag_matrix({3.0, 1.0}), 1.0};
  const auto b = check_uplink_rate_bound(probe);
  EXPECT_NEAR(b.lhs, std::log2(7.0 / 4.0) + std::log2(3.0 / 2.0), 1e-12);
  EXPECT_NEAR(b.rhs, std::log2(2.5) + std::log2(1.25), 1e-12);
  EXPECT_FALSE(b.equal);
}

TEST(UplinkRateBound, ZeroSignal) {
  MajorizationProbe probe{ComplexMatrix::Zero(3, 3), diag_matrix({1.0, 2.0, 0.0}), 1.0};
  const auto b = check_uplink_rate_bound(probe);
  EXPECT_NEAR(b.lhs, 0.0, 1e-12);
  EXPECT_NEAR(b.rhs, 0.0, 1e-12);
  EXPECT_TRUE(b.equal);
}

TEST(PowerLowerBound, HoldsOnRandomProbes) {
  Rng rng(14);
  for (int t = 0; t < 1000; ++t) {
    const Eigen::Index nr = 1 + t % 4, nu = 1 + (t / 4) % 4;
    const ComplexMatrix h = gaussian_matrix(nr, nu, rng);
    ComplexMatrix s = random_psd(nu, rng);
    if (nu > nr) {
      // Keep S inside the row space of H so no energy lands on a zero-gain direction.
      const ChannelSpectrum spec = svd(h);
      const ComplexMatrix v = spec.right_basis.leftCols(spec.rank);
      s = v * v.adjoint() * s * v * v.adjoint();
    }
    const auto b = check_power_lower_bound(h, s);
    EXPECT_GE(b.trace - b.bound, -1e-9 * std::max(1.0, b.trace));
  }
}

TEST(PowerLowerBound, EqualityForAlignedSignal) {
  Rng rng(15);
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index nr = 1 + t % 3, nu = 1 + (t / 3) % 3;
    const ComplexMatrix h = gaussian_matrix(nr, nu, rng);
    const ChannelSpectrum spec = svd(h);
    std::vector<double> p(spec.subchannels());
    for (auto& v : p) v = rng.uniform();
    // Descending powers keep h_d^2 p_d in the order of the gains.
    std::sort(p.begin(), p.end(), std::greater<>());
    const auto b = check_power_lower_bound(h, conjugate_diagonal(spec.right_basis, p));
    EXPECT_NEAR(b.trace, b.bound, 1e-9 * std::max(1.0, b.trace));
    EXPECT_TRUE(b.equal);
  }
}

TEST(PowerLowerBound, Errors) {
  // Power on the null direction of a rank-one channel is wasted: it counts
  // toward the trace but not the bound.
  ComplexMatrix h = diag_matrix({1.0, 0.0});
  const auto wasted = check_power_lower_bound(h, diag_matrix({0.0, 1.0}));
  EXPECT_EQ(wasted.trace, 1.0);
  EXPECT_EQ(wasted.bound, 0.0);
  EXPECT_FALSE(wasted.equal);
  EXPECT_THROW(check_power_lower_bound(h, ComplexMatrix::Identity(3, 3)), InvalidInput);
  const auto zero = check_power_lower_bound(h, ComplexMatrix::Zero(2, 2));
  EXPECT_EQ(zero.trace, 0.0);
  EXPECT_EQ(zero.bound, 0.0);
}

TEST(DownlinkBounds, HoldOnRandomProbes) {
  Rng rng(16);
  for (int t = 0; t < 1000; ++t) {
    const Eigen::Index nr = 1 + t % 4, nu = 1 + (t / 4) % 4;
    const ComplexMatrix h = gaussian_matrix(nr, nu, rng);
    const ComplexMatrix m = random_psd(nr, rng);
    const double sigma2 = 0.5 + rng.uniform();
    const auto sig = check_downlink_bounds(h, m, DownlinkBound::kSignal, sigma2);
    const auto qnt = check_downlink_bounds(h, m, DownlinkBound::kQuantizer, sigma2);
    EXPECT_GE(sig.rhs - sig.lhs, -1e-9);
    EXPECT_GE(qnt.lhs - qnt.rhs, -1e-9);
    // Both sides of each bound share log2 |M G + sigma^2 I|.
    EXPECT_NEAR(sig.lhs, qnt.lhs, 1e-12 * std::max(1.0, std::abs(sig.lhs)));
  }
}

TEST(DownlinkBounds, LhsMatchesDeterminantOracle) {
  Rng rng(17);
  for (int t = 0; t < 50; ++t) {
    const ComplexMatrix h = gaussian_matrix(3, 2, rng);
    const ComplexMatrix m = random_psd(3, rng);
    const ComplexMatrix mg = m * h * h.adjoint() + ComplexMatrix::Identity(3, 3);
    Eigen::ComplexEigenSolver<ComplexMatrix> es(mg);
    double ref = 0.0;
    for (Eigen::Index i = 0; i < 3; ++i) ref += std::log2(std::abs(es.eigenvalues()(i)));
    EXPECT_NEAR(check_downlink_bounds(h, m, DownlinkBound::kSignal, 1.0).lhs, ref, 1e-9);
  }
}

TEST(DownlinkBounds, EqualityInChannelBasis) {
  Rng rng(18);
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index nr = 1 + t % 4, nu = 1 + (t / 4) % 3;
    const ComplexMatrix h = gaussian_matrix(nr, nu, rng);
    const ChannelSpectrum spec = svd(h);
    std::vector<double> levels(nr);
    for (auto& v : levels) v = 2.0 * rng.uniform();
    // Descending levels on the strongest directions attain the signal bound.
    std::sort(levels.begin(), levels.end(), std::greater<>());
    const auto sig = check_downlink_bounds(h, conjugate_diagonal(spec.left_basis, levels), DownlinkBound::kSignal, 1.0);
    EXPECT_NEAR(sig.lhs, sig.rhs, 1e-9);
    // Ascending levels attain the quantizer bound.
    std::reverse(levels.begin(), levels.end());
    const auto qnt =
        check_downlink_bounds(h, conjugate_diagonal(spec.left_basis, levels), DownlinkBound::kQuantizer, 1.0);
    EXPECT_NEAR(qnt.lhs, qnt.rhs, 1e-9);
  }
}

TEST(DownlinkBounds, RotatedBasisIsStrict) {
  const ComplexMatrix h = diag_matrix({2.0, 1.0});
  ComplexMatrix rot(2, 2);
  const double r = std::sqrt(0.5);
  rot << r, -r, r, r;
  const std::vector<double> levels{3.0, 1.0};
  const ComplexMatrix m = conjugate_diagonal(rot, levels);
  const auto sig = check_downlink_bounds(h, m, DownlinkBound::kSignal, 1.0);
  const auto qnt = check_downlink_bounds(h, m, DownlinkBound::kQuantizer, 1.0);
  EXPECT_GT(sig.rhs - sig.lhs, 1e-3);
  EXPECT_GT(qnt.lhs - qnt.rhs, 1e-3);
  EXPECT_FALSE(sig.equal);
}

TEST(DownlinkBounds, Errors) {
  const ComplexMatrix h = ComplexMatrix::Identity(2, 2);
  EXPECT_THROW(check_downlink_bounds(h, ComplexMatrix::Identity(3, 3), DownlinkBound::kSignal, 1.0), InvalidInput);
  EXPECT_THROW(check_downlink_bounds(h, h, DownlinkBound::kSignal, 0.0), InvalidInput);
}

TEST(SchurGeoConvexity, TwoByTwoExample) {
  const auto x = SpectrumVector::descending({4.0, 1.0});
  const auto y = SpectrumVector::descending({2.0, 2.0});
  EXPECT_TRUE(schur_geo_convexity_probe(x, y, 1.0));
  // f(x) = log2(5 * 2) > f(y) = log2(3 * 3).
  EXPECT_THROW(schur_geo_convexity_probe(y, x, 1.0), InvalidInput);
}

TEST(SchurGeoConvexity, GeneratedPairs) {
  // y is obtained from x by pulling two entries toward their geometric mean,
  // which keeps the product and makes x log-majorize y.
  Rng rng(19);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 2 + t % 4;
    std::vector<double> y(n);
    for (auto& v : y) v = 0.05 + 3.0 * rng.uniform();
    std::vector<double> x = y;
    const std::size_t i = t % n, j = (t + 1) % n;
    const double hi = std::max(x[i], x[j]), lo = std::min(x[i], x[j]);
    const double spread = 1.0 + 4.0 * rng.uniform();
    x[i] = hi * spread;
    x[j] = lo / spread;
    const auto xs = SpectrumVector::descending(x), ys = SpectrumVector::descending(y);
    ASSERT_TRUE(log_majorizes(xs, ys)) << "trial " << t;
    EXPECT_TRUE(schur_geo_convexity_probe(xs, ys, 0.2 + rng.uniform())) << "trial " << t;
  }
}

}  // namespace
}  // namespace crandiag
