#include <gtest/gtest.h>

#include "cia/errors.hpp"
#include "cia/multibang.hpp"
#include "cia/rounding.hpp"
#include "support/oracles.hpp"

#include <random>

namespace {

using cia::BinaryControl;
using cia::RelaxedControl;
using cia::RoundingAlgorithm;
using cia::RoundingConfig;
using cia::RoundingGrid;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using cia_test::uniform;
using cia_test::uniform_int;

RoundingConfig config(RoundingAlgorithm algo, bool zero_mass = false) {
  RoundingConfig c;
  c.algorithm = algo;
  c.zero_mass_preserving = zero_mass;
  return c;
}

RelaxedControl binary_alpha(const RoundingGrid& g, int count, const std::vector<int>& choice) {
  return RelaxedControl(g, BinaryControl(g, count, choice).coefficients());
}

RoundingGrid random_grid(std::mt19937_64& rng, int n) {
  std::vector<double> b{0.0};
  for (int k = 0; k < n; ++k) b.push_back(b.back() + uniform(rng, 0.01, 1.0));
  return RoundingGrid(b);
}

RelaxedControl random_alpha(std::mt19937_64& rng, const RoundingGrid& g, int m, double zero_probability) {
  MatrixXd a(m, static_cast<Eigen::Index>(g.size()));
  for (Eigen::Index k = 0; k < a.cols(); ++k) a.col(k) = cia_test::random_simplex_point(rng, m, zero_probability);
  return RelaxedControl(g, a);
}

TEST(Sur, BinaryInputIsReproduced) {
  const RoundingGrid g = RoundingGrid::uniform(0, 1, 6);
  const std::vector<int> choice{2, 0, 0, 1, 2, 1};
  for (auto algo : {RoundingAlgorithm::kSur, RoundingAlgorithm::kNfr}) {
    const BinaryControl w = cia::round(g, binary_alpha(g, 3, choice), config(algo)).omega;
    EXPECT_EQ(w.choices(), choice);
  }
}

TEST(Sur, AlternatesOnHalfHalf) {
  const RoundingGrid g = RoundingGrid::uniform(0, 1, 4);
  const RelaxedControl a(g, MatrixXd::Constant(2, 4, 0.5));
  const BinaryControl w = cia::round_sur(g, a);
  EXPECT_EQ(w.choices(), (std::vector<int>{0, 1, 0, 1}));
  // Brute force over all 2^4 binary controls: nothing beats its prefix deviation.
  const double mine = cia::pseudometric_dT(g, a, w);
  for (int mask = 0; mask < 16; ++mask) {
    std::vector<int> c;
    for (int k = 0; k < 4; ++k) c.push_back((mask >> k) & 1);
    EXPECT_LE(mine, cia::pseudometric_dT(g, a, BinaryControl(g, 2, c)) + 1e-15);
  }
}

TEST(Nfr, HalfHalfOnTwoCells) {
  const RoundingGrid g = RoundingGrid::uniform(0, 1, 2);
  const RelaxedControl a(g, MatrixXd::Constant(2, 2, 0.5));
  const auto out = cia::round(g, a, config(RoundingAlgorithm::kNfr));
  EXPECT_NEAR(out.distance, 0.25, 1e-15);
  EXPECT_LE(out.distance, g.max_measure() / 2 + 1e-15);
}

TEST(Rounding, RandomContractConservationAndZeroMass) {
  std::mt19937_64 rng(89);
  for (int trial = 0; trial < 300; ++trial) {
    const int m = uniform_int(rng, 2, 5);
    const RoundingGrid g = trial % 2 == 0 ? RoundingGrid::uniform(0, 1, uniform_int(rng, 1, 64)) : random_grid(rng, uniform_int(rng, 1, 64));
    const RelaxedControl a = random_alpha(rng, g, m, trial % 3 == 0 ? 0.5 : 0.0);
    for (auto algo : {RoundingAlgorithm::kSur, RoundingAlgorithm::kNfr}) {
      for (bool zm : {false, true}) {
        const BinaryControl w = cia::round(g, a, config(algo, zm)).omega;
        const double theta = m - 1;
        EXPECT_TRUE(cia::verify_contract(g, a, w, theta)) << "trial " << trial;
        const VectorXd diff = a.as_control().integral() - w.integral();
        EXPECT_LE(diff.cwiseAbs().maxCoeff(), theta * g.max_measure() + 1e-12);
        if (zm) {
          for (std::size_t k = 0; k < g.size(); ++k) {
            EXPECT_GT(a.coefficients()(w.choices()[k], static_cast<Eigen::Index>(k)), 0.0);
          }
        }
      }
    }
  }
}

TEST(Rounding, Deterministic) {
  std::mt19937_64 rng(97);
  const RoundingGrid g = random_grid(rng, 50);
  const RelaxedControl a = random_alpha(rng, g, 4, 0.3);
  for (auto algo : {RoundingAlgorithm::kSur, RoundingAlgorithm::kNfr}) {
    EXPECT_EQ(cia::round(g, a, config(algo)).omega.choices(), cia::round(g, a, config(algo)).omega.choices());
  }
}

TEST(Rounding, RegularizerBoundForSelectorOutput) {
  std::mt19937_64 rng(101);
  const auto spec = cia::RegularizerSpec::scalar({-1.0, -0.25, 0.0, 0.35, 1.0}, {1.0, 0.125, 0.0, 0.175, 1.0});
  const double c = spec.weights().cwiseAbs().sum() * 4.0;
  for (int trial = 0; trial < 30; ++trial) {
    const RoundingGrid g = RoundingGrid::uniform(-1, 1, uniform_int(rng, 1, 128));
    MatrixXd vals(1, static_cast<Eigen::Index>(g.size()));
    for (Eigen::Index k = 0; k < vals.cols(); ++k) vals(0, k) = uniform(rng, -1, 1);
    const cia::PiecewiseConstantControl vbar(g, vals);
    MatrixXd alpha(5, vals.cols());
    for (Eigen::Index k = 0; k < vals.cols(); ++k) alpha.col(k) = cia::select_coefficients(spec, vals.col(k));
    const RelaxedControl a(g, alpha);
    for (auto algo : {RoundingAlgorithm::kSur, RoundingAlgorithm::kNfr}) {
      const BinaryControl w = cia::round(g, a, config(algo)).omega;
      const double rbar = cia::integrate_R(spec, vbar);
      const double rhat = cia::integrate_R(spec, cia::bang_combination(spec, w));
      EXPECT_LE(std::abs(rbar - rhat), c * g.max_measure() + 1e-12);
    }
  }
}

TEST(VerifyContract, Examples) {
  const RoundingGrid g = RoundingGrid::uniform(0, 1, 10);
  MatrixXd e2 = MatrixXd::Zero(2, 10);
  e2.row(1).setOnes();
  const RelaxedControl a(g, e2);
  const BinaryControl exact(g, 2, std::vector<int>(10, 1));
  EXPECT_TRUE(cia::verify_contract(g, a, exact, 1e-6));
  // All mass on bang 1 against α ≡ e_2: d_T = N λ = 1, so θ must reach N.
  const BinaryControl wrong(g, 2, std::vector<int>(10, 0));
  EXPECT_FALSE(cia::verify_contract(g, a, wrong, 9.5));
  EXPECT_TRUE(cia::verify_contract(g, a, wrong, 10.0));
}

TEST(VerifyContract, DomainMismatch) {
  const RoundingGrid g = RoundingGrid::uniform(0, 1, 4);
  const RelaxedControl a(g, MatrixXd::Constant(2, 4, 0.5));
  const RoundingGrid other = RoundingGrid::uniform(0, 1, 8);
  EXPECT_THROW(cia::round_sur(other, a), cia::Error);
  EXPECT_THROW(cia::verify_contract(other, a, BinaryControl(g, 2, {0, 1, 0, 1}), 1.0), cia::Error);
}

TEST(Rounding, ThetaCheckReported) {
  const RoundingGrid g = RoundingGrid::uniform(0, 1, 8);
  const RelaxedControl a(g, MatrixXd::Constant(3, 8, 1.0 / 3.0));
  RoundingConfig c = config(RoundingAlgorithm::kSur);
  c.theta_check = 2.0;
  const auto out = cia::round(g, a, c);
  ASSERT_TRUE(out.contract_met.has_value());
  EXPECT_TRUE(*out.contract_met);
  EXPECT_EQ(cia::parse_rounding_algorithm("nfr"), RoundingAlgorithm::kNfr);
  EXPECT_EQ(cia::to_string(RoundingAlgorithm::kSur), "sur");
  EXPECT_THROW(cia::parse_rounding_algorithm("scarp"), cia::Error);
}

}  // namespace
