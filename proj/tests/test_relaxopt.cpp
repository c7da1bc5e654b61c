#include <gtest/gtest.h>

#include "cia/errors.hpp"
#include "cia/relaxopt.hpp"
#include "support/oracles.hpp"

#include <cmath>
#include <random>

namespace {

using cia::LvpOracle;
using cia::LvpSettings;
using cia::PiecewiseConstantControl;
using cia::RegularizerSpec;
using cia::RoundingGrid;
using cia::SmoothedRegularizer;
using cia::SmoothingMode;
using cia::SrpOracle;
using cia::SrpSettings;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using cia_test::uniform;

RegularizerSpec srp_spec() { return RegularizerSpec::scalar({-1.0, -0.25, 0.0, 0.35, 1.0}, {1.0, 0.125, 0.0, 0.175, 1.0}); }

RegularizerSpec lvp_spec() {
  MatrixXd v(2, 5);
  v << 0.0, 0.05, 0.4, 0.0, 0.4,  //
      -0.1, 0.0, -0.1, 0.1, 0.1;
  VectorXd g(5);
  g << 2.0, 0.0, 1.0, 2.0, 0.1;
  return RegularizerSpec::create(v, g);
}

PiecewiseConstantControl random_feasible(std::mt19937_64& rng, const RegularizerSpec& spec, const RoundingGrid& grid) {
  MatrixXd vals(spec.dim(), static_cast<Eigen::Index>(grid.size()));
  for (Eigen::Index k = 0; k < vals.cols(); ++k) vals.col(k) = cia_test::random_hull_point(rng, spec.bangs());
  return {grid, vals};
}

double fd_relative_error(const cia::ObjectiveOracle& oracle, const PiecewiseConstantControl& v, double h) {
  const auto vg = oracle.value_grad(v);
  double worst = 0.0;
  for (Eigen::Index k = 0; k < v.values().cols(); ++k) {
    for (Eigen::Index i = 0; i < v.values().rows(); ++i) {
      MatrixXd plus = v.values();
      MatrixXd minus = v.values();
      plus(i, k) += h;
      minus(i, k) -= h;
      const double fd = (oracle.value({v.grid(), plus}) - oracle.value({v.grid(), minus})) / (2 * h);
      const double analytic = vg.gradient(i, k) * v.grid().measure(static_cast<std::size_t>(k));
      const double scale = std::max(std::abs(fd), 1e-3 * std::max(1e-12, vg.gradient.cwiseAbs().maxCoeff() * v.grid().measure(static_cast<std::size_t>(k))));
      worst = std::max(worst, std::abs(analytic - fd) / scale);
    }
  }
  return worst;
}

TEST(GaussLegendre, ThreePointRule) {
  const auto [x, w] = cia::gauss_legendre(3);
  ASSERT_EQ(x.size(), 3u);
  EXPECT_NEAR(x[0], -std::sqrt(0.6), 1e-15);
  EXPECT_NEAR(x[1], 0.0, 1e-15);
  EXPECT_NEAR(x[2], std::sqrt(0.6), 1e-15);
  EXPECT_NEAR(w[0], 5.0 / 9.0, 1e-15);
  EXPECT_NEAR(w[1], 8.0 / 9.0, 1e-15);
}

TEST(GaussLegendre, ExactForHighDegreePolynomials) {
  for (int n = 1; n <= 12; ++n) {
    const auto [x, w] = cia::gauss_legendre(n);
    for (int p = 0; p <= 2 * n - 1; ++p) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += w[static_cast<std::size_t>(i)] * std::pow(x[static_cast<std::size_t>(i)], p);
      const double exact = p % 2 == 1 ? 0.0 : 2.0 / (p + 1);
      EXPECT_NEAR(s, exact, 1e-13) << "n=" << n << " p=" << p;
    }
  }
}

TEST(Srp, KernelIntegralMatchesQuadrature) {
  const SrpOracle oracle(SrpSettings{});
  for (double t : {-0.9, -0.3, 0.0, 0.41, 0.95}) {
    for (auto [a, b] : {std::pair{-1.0, -0.2}, std::pair{-0.1, 0.3}, std::pair{0.2, 1.0}}) {
      const double q = cia_test::simpson(
          [&](double s) {
            const double d = t - s;
            return std::abs(d) <= 0.5 ? std::exp(-d * d / (2 * 0.01)) : 0.0;
          },
          a, b, 200000);
      EXPECT_NEAR(oracle.kernel_integral(t, a, b), q, 1e-6);
    }
  }
}

TEST(Srp, ZeroTargetZeroControl) {
  SrpSettings s;
  s.target_values = {0, 0, 0, 0, 0};
  const SrpOracle oracle(s);
  const auto v = PiecewiseConstantControl::constant(RoundingGrid::uniform(-1, 1, 32), VectorXd::Zero(1));
  const auto vg = oracle.value_grad(v);
  EXPECT_EQ(vg.value, 0.0);
  EXPECT_EQ(vg.gradient.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Srp, ConvexAlongSegments) {
  const SrpOracle oracle(SrpSettings{});
  std::mt19937_64 rng(111);
  const RoundingGrid grid = RoundingGrid::uniform(-1, 1, 64);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_feasible(rng, srp_spec(), grid);
    const auto b = random_feasible(rng, srp_spec(), grid);
    const double t = uniform(rng, 0, 1);
    const PiecewiseConstantControl mix(grid, t * a.values() + (1 - t) * b.values());
    EXPECT_LE(oracle.value(mix), t * oracle.value(a) + (1 - t) * oracle.value(b) + 1e-14);
    EXPECT_NEAR(oracle.value(a), oracle.value_grad(a).value, 1e-15);
  }
}

TEST(Srp, GradientMatchesFiniteDifferences) {
  const SrpOracle oracle(SrpSettings{});
  std::mt19937_64 rng(113);
  const RoundingGrid grid = RoundingGrid::uniform(-1, 1, 24);
  for (int trial = 0; trial < 5; ++trial) {
    EXPECT_LE(fd_relative_error(oracle, random_feasible(rng, srp_spec(), grid), 1e-5), 1e-5);
  }
}

TEST(Srp, HorizonMismatch) {
  const SrpOracle oracle(SrpSettings{});
  const auto v = PiecewiseConstantControl::constant(RoundingGrid::uniform(0, 1, 4), VectorXd::Zero(1));
  try {
    oracle.value(v);
    FAIL();
  } catch (const cia::Error& e) {
    EXPECT_EQ(e.code(), cia::ErrorCode::kDomainMismatch);
  }
}

TEST(Srp, ConvolutionCacheIsConsistent) {
  const SrpOracle oracle(SrpSettings{});
  const RoundingGrid g = RoundingGrid::uniform(-1, 1, 40);
  const auto w1 = oracle.convolution(g);
  for (int n = 1; n <= 6; ++n) oracle.convolution(RoundingGrid::uniform(-1, 1, n));
  const auto w2 = oracle.convolution(g);
  EXPECT_EQ(*w1, *w2);
}

TEST(Lvp, MinimumWeightBangHasNoRegularizerCost) {
  const RegularizerSpec spec = lvp_spec();
  const auto v = PiecewiseConstantControl::constant(RoundingGrid::uniform(0, 12, 16), spec.bang(1));
  const LvpOracle oracle(LvpSettings{});
  EXPECT_EQ(cia::integrate_R(spec, v), 0.0);
  EXPECT_NEAR(cia::exact_objective(oracle, spec, v), oracle.value(v), 0.0);
}

TEST(Lvp, TrajectoryStartsAtInitialState) {
  const LvpOracle oracle(LvpSettings{});
  const auto v = PiecewiseConstantControl::constant(RoundingGrid::uniform(0, 12, 16), VectorXd::Zero(2));
  const auto traj = oracle.trajectory(v);
  ASSERT_EQ(traj.size(), 17u);
  EXPECT_EQ(traj.front()(0), 0.5);
  EXPECT_EQ(traj.front()(1), 0.7);
  for (const auto& y : traj) EXPECT_TRUE(y.allFinite());
}

TEST(Lvp, Rk4SelfConvergenceOrderFour) {
  std::mt19937_64 rng(127);
  const RoundingGrid grid = RoundingGrid::uniform(0, 12, 16);
  const auto v = random_feasible(rng, lvp_spec(), grid);
  std::vector<double> values;
  for (int steps : {2, 4, 8}) {
    LvpSettings s;
    s.rk4_steps_per_cell = steps;
    values.push_back(LvpOracle(s).value(v));
  }
  const double ratio = (values[0] - values[1]) / (values[1] - values[2]);
  EXPECT_NEAR(ratio, 16.0, 16.0 * 0.3);
}

TEST(Lvp, GradientMatchesFiniteDifferences) {
  const LvpOracle oracle(LvpSettings{});
  std::mt19937_64 rng(131);
  const RoundingGrid grid = RoundingGrid::uniform(0, 12, 16);
  for (int trial = 0; trial < 4; ++trial) {
    EXPECT_LE(fd_relative_error(oracle, random_feasible(rng, lvp_spec(), grid), 1e-5), 1e-4);
  }
}

TEST(Lvp, Diverges) {
  const LvpOracle oracle(LvpSettings{});
  VectorXd u(2);
  u << -50.0, 0.0;
  const auto v = PiecewiseConstantControl::constant(RoundingGrid::uniform(0, 12, 16), u);
  try {
    oracle.value(v);
    FAIL();
  } catch (const cia::Error& e) {
    EXPECT_EQ(e.code(), cia::ErrorCode::kDiverged);
  }
}

TEST(SolveRelaxation, ZeroObjectiveConvergesToZeroWeightBang) {
  const cia::ZeroOracle oracle(1, 0.0, 1.0, 1.0);
  const auto sm = SmoothedRegularizer::create(srp_spec(), 0.05, SmoothingMode::kMoreau);
  cia::SolveSettings settings;
  settings.epsilon = 1e-10;
  const auto res = cia::solve_relaxation(oracle, sm, RoundingGrid::uniform(0, 1, 16), settings);
  EXPECT_EQ(res.certificate.status, cia::CertificateStatus::kMet);
  EXPECT_EQ(res.certificate.kind, cia::CertificateKind::kFrankWolfeGap);
  EXPECT_FALSE(res.certificate.local_only);
  EXPECT_LE(res.v.values().cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LE(std::abs(res.objective), 1e-12);
}

TEST(SolveRelaxation, MonotoneDescentAndFeasibility) {
  const SrpOracle oracle(SrpSettings{});
  const auto sm = SmoothedRegularizer::create(srp_spec(), 0.05, SmoothingMode::kRamp1d);
  const RoundingGrid grid = RoundingGrid::uniform(-1, 1, 64);
  cia::SolveSettings settings;
  settings.epsilon = 1e-14;
  double prev = std::numeric_limits<double>::infinity();
  for (int iters = 1; iters <= 25; ++iters) {
    settings.max_iterations = iters;
    const auto res = cia::solve_relaxation(oracle, sm, grid, settings);
    EXPECT_LE(res.objective, prev + 1e-12);
    prev = res.objective;
    for (std::size_t k = 0; k < grid.size(); ++k) EXPECT_TRUE(srp_spec().contains(res.v.value(k), 1e-8));
  }
}

TEST(SolveRelaxation, BeatsConstantBangControls) {
  const SrpOracle oracle(SrpSettings{});
  const RegularizerSpec spec = srp_spec();
  const auto sm = SmoothedRegularizer::create(spec, 0.01, SmoothingMode::kRamp1d);
  const RoundingGrid grid = RoundingGrid::uniform(-1, 1, 128);
  cia::SolveSettings settings;
  settings.epsilon = 1e-6;
  const auto res = cia::solve_relaxation(oracle, sm, grid, settings);
  for (Eigen::Index i = 0; i < spec.count(); ++i) {
    const auto c = PiecewiseConstantControl::constant(grid, spec.bang(i));
    EXPECT_LE(res.objective, cia::smoothed_objective(oracle, sm, c).value);
  }
}

TEST(SolveRelaxation, CertificateIsSound) {
  std::mt19937_64 rng(137);
  const RegularizerSpec spec = srp_spec();
  const std::vector<double> levels{-1.0, -0.25, 0.0, 0.35, 1.0};
  for (int trial = 0; trial < 5; ++trial) {
    SrpSettings s;
    s.observation_cells = 64;
    for (double& t : s.target_values) t = levels[static_cast<std::size_t>(cia_test::uniform_int(rng, 0, 4))];
    const SrpOracle oracle(s);
    const auto sm = SmoothedRegularizer::create(spec, 0.05, SmoothingMode::kRamp1d);
    const RoundingGrid grid = RoundingGrid::uniform(-1, 1, 32);
    cia::SolveSettings loose;
    loose.epsilon = 1e-3;
    cia::SolveSettings tight;
    tight.epsilon = 1e-11;
    tight.max_iterations = 200000;
    const auto approx = cia::solve_relaxation(oracle, sm, grid, loose);
    const auto ref = cia::solve_relaxation(oracle, sm, grid, tight);
    ASSERT_EQ(approx.certificate.status, cia::CertificateStatus::kMet);
    EXPECT_LE(approx.objective - ref.objective, approx.certificate.measure + 1e-12);
    // The gap also dominates the suboptimality against arbitrary feasible points.
    const auto vg = cia::smoothed_objective(oracle, sm, approx.v);
    const double gap = cia::frank_wolfe_gap(spec, approx.v, vg.gradient);
    for (int k = 0; k < 20; ++k) {
      const auto w = random_feasible(rng, spec, grid);
      EXPECT_GE(gap, vg.value - cia::smoothed_objective(oracle, sm, w).value - 1e-8);
    }
  }
}

TEST(SolveRelaxation, NonconvexCertificateIsLocal) {
  const LvpOracle oracle(LvpSettings{});
  const auto sm = SmoothedRegularizer::create(lvp_spec(), 0.3125, SmoothingMode::kMoreau);
  cia::SolveSettings settings;
  settings.epsilon = 1e-3;
  const auto res = cia::solve_relaxation(oracle, sm, RoundingGrid::uniform(0, 12, 16), settings);
  EXPECT_EQ(res.certificate.kind, cia::CertificateKind::kStationarity);
  EXPECT_TRUE(res.certificate.local_only);
  EXPECT_EQ(res.certificate.status, cia::CertificateStatus::kMet);
  EXPECT_LT(res.certificate.measure, 1e-3);
}

TEST(SolveRelaxation, IterationLimitReportsNotMet) {
  const SrpOracle oracle(SrpSettings{});
  const auto sm = SmoothedRegularizer::create(srp_spec(), 0.01, SmoothingMode::kRamp1d);
  cia::SolveSettings settings;
  settings.epsilon = 1e-14;
  settings.max_iterations = 2;
  const auto res = cia::solve_relaxation(oracle, sm, RoundingGrid::uniform(-1, 1, 64), settings);
  EXPECT_EQ(res.certificate.status, cia::CertificateStatus::kNotMet);
  EXPECT_LE(res.certificate.iterations, 2);
}

}  // namespace
