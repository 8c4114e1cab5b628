#include <gtest/gtest.h>

#include <cmath>

#include "crandiag/experiment.hpp"
#include "crandiag/oracle.hpp"
#include "test_support.hpp"

namespace crandiag {
namespace {

using testing::brute_force_scalar;
using testing::closed_form_rate;
using testing::sorted_gains;

ChannelInstance make_instance(const ComplexMatrix& h, double p, double c, double sigma2 = 1.0) {
  ChannelInstance inst;
  inst.channel = h;
  inst.power_budget = p;
  inst.fronthaul_capacity = c;
  inst.noise_variance = sigma2;
  return inst;
}

TEST(GridOracle, SingleSubchannelIsExact) {
  const std::vector<double> g{1.3};
  const auto a = grid_oracle_scalar(g, 2.0, 3.0, 1.0, Direction::kUplink);
  EXPECT_NEAR(allocation_rate(a, g, 1.0), closed_form_rate(1.69, 2.0, 3.0, 1.0), 1e-12);
}

TEST(GridOracle, EqualGains) {
  const std::vector<double> g{1.0, 1.0};
  const auto a = grid_oracle_scalar(g, 2.0, 2.0, 1.0, Direction::kUplink);
  EXPECT_NEAR(allocation_rate(a, g, 1.0), 1.0, 1e-9);
}

TEST(GridOracle, AgreesWithBruteForce) {
  Rng rng(21);
  for (int t = 0; t < 10; ++t) {
    const auto g = sorted_gains(rng, 2);
    const double p = 0.3 + 3.0 * rng.uniform(), c = 0.3 + 5.0 * rng.uniform();
    const double ref = brute_force_scalar(g, p, c, 1.0, 300);
    const auto a = grid_oracle_scalar(g, p, c, 1.0, t % 2 ? Direction::kUplink : Direction::kDownlink);
    EXPECT_NEAR(allocation_rate(a, g, 1.0), ref, 1e-4);
    EXPECT_TRUE(within_budgets(a, p, c));
  }
}

TEST(GridOracle, ZeroFronthaulAndErrors) {
  const std::vector<double> g{2.0, 1.0};
  EXPECT_EQ(allocation_rate(grid_oracle_scalar(g, 1.0, 0.0, 1.0, Direction::kUplink), g, 1.0), 0.0);
  const std::vector<double> four{4.0, 3.0, 2.0, 1.0};
  EXPECT_THROW(grid_oracle_scalar(four, 1.0, 1.0, 1.0, Direction::kUplink), UnsupportedSize);
  EXPECT_THROW(grid_oracle_scalar(std::vector<double>{}, 1.0, 1.0, 1.0, Direction::kUplink), InvalidInput);
  EXPECT_THROW(grid_oracle_scalar(g, -1.0, 1.0, 1.0, Direction::kUplink), InvalidInput);
}

TEST(FeasibilityProjection, UplinkLandsOnBudgets) {
  Rng rng(22);
  for (int t = 0; t < 50; ++t) {
    const auto inst = make_instance(gaussian_matrix(2, 3, rng), 1.5, 2.5);
    UplinkDesign d{random_psd(3, rng), random_psd(2, rng), std::nullopt};
    const auto proj = feasibility_projection(inst, d);
    EXPECT_NEAR(trace_real(proj.transmit), 1.5, 1e-12);
    const auto r = check_feasible_p1(inst, proj);
    EXPECT_TRUE(r.feasible);
    EXPECT_NEAR(r.fronthaul_used, 2.5, 1e-9);
  }
}

TEST(FeasibilityProjection, DownlinkLandsOnBudgets) {
  Rng rng(23);
  for (int t = 0; t < 50; ++t) {
    const auto inst = make_instance(gaussian_matrix(3, 2, rng), 2.0, 1.5);
    DownlinkDesign d{random_psd(3, rng), random_psd(3, rng), std::nullopt};
    const auto proj = feasibility_projection(inst, d);
    const auto r = check_feasible_p2(inst, proj);
    EXPECT_TRUE(r.feasible);
    EXPECT_NEAR(r.power_used, 2.0, 1e-9);
    EXPECT_NEAR(r.fronthaul_used, 1.5, 1e-9);
  }
}

TEST(FeasibilityProjection, SingularQuantizerFails) {
  const auto inst = make_instance(ComplexMatrix::Identity(2, 2), 1.0, 1.0);
  UplinkDesign d{ComplexMatrix::Identity(2, 2), testing::diag_matrix({1.0, 0.0}), std::nullopt};
  EXPECT_THROW(feasibility_projection(inst, d), ProjectionFailure);
  DownlinkDesign dd{ComplexMatrix::Identity(2, 2), testing::diag_matrix({1.0, 0.0}), std::nullopt};
  EXPECT_THROW(feasibility_projection(inst, dd), ProjectionFailure);
}

TEST(PerturbationSearch, ZeroTrials) {
  const auto inst = make_instance(ComplexMatrix::Identity(2, 2), 2.0, 2.0);
  const auto sol = solve_direction(inst, svd(inst.channel), Direction::kUplink, SolverOptions{});
  const auto rep = perturbation_search(inst, *sol.uplink, 0, 1);
  EXPECT_EQ(rep.margin, 0.0);
  EXPECT_EQ(rep.evaluated, 0);
  EXPECT_TRUE(rep.verdict);
}

TEST(PerturbationSearch, DiagonalDesignIsNotBeaten) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto inst = make_instance(random_channel(2, 2, seed), 1.0, 2.0);
    const auto spec = svd(inst.channel);
    const auto ul = solve_direction(inst, spec, Direction::kUplink, SolverOptions{});
    const auto dl = solve_direction(inst, spec, Direction::kDownlink, SolverOptions{});
    const auto ru = perturbation_search(inst, *ul.uplink, 1000, seed);
    const auto rd = perturbation_search(inst, *dl.downlink, 1000, seed);
    EXPECT_GE(ru.margin, -1e-6);
    EXPECT_GE(rd.margin, -1e-6);
    EXPECT_GT(ru.evaluated, 500);
    EXPECT_GT(rd.evaluated, 500);
  }
}

TEST(PerturbationSearch, DetectsHalfPowerDesign) {
  const auto inst = make_instance(random_channel(2, 2, 7), 1.0, 2.0);
  const auto spec = svd(inst.channel);
  const auto ul = solve_direction(inst, spec, Direction::kUplink, SolverOptions{}, 0.5);
  const auto dl = solve_direction(inst, spec, Direction::kDownlink, SolverOptions{}, 0.5);
  EXPECT_LT(perturbation_search(inst, *ul.uplink, 200, 3).margin, -0.01);
  EXPECT_LT(perturbation_search(inst, *dl.downlink, 200, 3).margin, -0.01);
}

TEST(PerturbationSearch, ScalarChannelSoundness) {
  // With one antenna on each side every feasible design is a scalar pair,
  // so the search can at best tie the closed form.
  const auto inst = make_instance(ComplexMatrix::Constant(1, 1, Complex(0.8, 0.6)), 1.0, 1.5);
  const auto sol = solve_direction(inst, svd(inst.channel), Direction::kUplink, SolverOptions{});
  const auto rep = perturbation_search(inst, *sol.uplink, 300, 5);
  EXPECT_NEAR(rep.diagonal_rate, closed_form_rate(1.0, 1.0, 1.5, 1.0), 1e-9);
  EXPECT_NEAR(rep.best_perturbed_rate, rep.diagonal_rate, 1e-9);
}

TEST(PerturbationSearch, RejectsInfeasibleBase) {
  const auto inst = make_instance(ComplexMatrix::Identity(2, 2), 1.0, 1.0);
  UplinkDesign d{ComplexMatrix::Identity(2, 2) * 5.0, ComplexMatrix::Identity(2, 2), std::nullopt};
  EXPECT_THROW(perturbation_search(inst, d, 10, 1), InvalidInput);
  EXPECT_THROW(perturbation_search(inst, d, -1, 1), InvalidInput);
}

}  // namespace
}  // namespace crandiag
