#include <benchmark/benchmark.h>

#include "cia/ciadrive.hpp"
#include "cia/cvxsolve.hpp"
#include "cia/multibang.hpp"
#include "cia/relaxopt.hpp"
#include "cia/rounding.hpp"

#include <random>

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

cia::RegularizerSpec srp_spec() { return cia::default_srp_config().spec; }
cia::RegularizerSpec lvp_spec() { return cia::default_lvp_config().spec; }

std::vector<VectorXd> hull_points(const cia::RegularizerSpec& spec, int count) {
  std::mt19937_64 rng(5);
  std::exponential_distribution<double> e(1.0);
  std::vector<VectorXd> pts;
  for (int p = 0; p < count; ++p) {
    VectorXd w(spec.count());
    for (Eigen::Index j = 0; j < w.size(); ++j) w(j) = e(rng);
    pts.push_back(spec.bangs() * (w / w.sum()));
  }
  return pts;
}

void BM_EvalG(benchmark::State& state) {
  const auto spec = state.range(0) == 1 ? srp_spec() : lvp_spec();
  const auto pts = hull_points(spec, 256);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(cia::eval_g(spec, pts[i++ % pts.size()]).value);
}
BENCHMARK(BM_EvalG)->Arg(1)->Arg(2);

void BM_ClosedFormScalar(benchmark::State& state) {
  const auto env = cia::ScalarEnvelope::from_spec(srp_spec());
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> pts(256);
  for (double& p : pts) p = u(rng);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(cia::eval_g_scalar_closed_form(env, pts[i++ % pts.size()]));
}
BENCHMARK(BM_ClosedFormScalar);

void BM_Selector(benchmark::State& state) {
  const auto spec = state.range(0) == 1 ? srp_spec() : lvp_spec();
  const auto pts = hull_points(spec, 256);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(cia::select_coefficients(spec, pts[i++ % pts.size()]));
}
BENCHMARK(BM_Selector)->Arg(1)->Arg(2);

void BM_Moreau(benchmark::State& state) {
  const auto spec = lvp_spec();
  const auto sm = cia::SmoothedRegularizer::create(spec, 0.01, cia::SmoothingMode::kMoreau);
  const auto pts = hull_points(spec, 256);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(cia::moreau_eval(sm, pts[i++ % pts.size()]).value);
}
BENCHMARK(BM_Moreau);

void BM_Ramp(benchmark::State& state) {
  const auto sm = cia::SmoothedRegularizer::create(srp_spec(), 0.05, cia::SmoothingMode::kRamp1d);
  double u = -1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cia::ramp1d_eval(sm, u).value);
    u = u + 0.0137 > 1.0 ? -1.0 : u + 0.0137;
  }
}
BENCHMARK(BM_Ramp);

void BM_SolveLp(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  cia::cvx::LinearProgram lp;
  lp.cost = VectorXd::NullaryExpr(n, [&](Eigen::Index) { return u(rng); });
  lp.eq_matrix = MatrixXd::NullaryExpr(3, n, [&](Eigen::Index, Eigen::Index) { return u(rng); });
  lp.eq_matrix.row(0).setOnes();
  lp.eq_rhs = lp.eq_matrix * VectorXd::Constant(n, 1.0 / n);
  for (auto _ : state) benchmark::DoNotOptimize(cia::cvx::solve_lp(lp).objective);
}
BENCHMARK(BM_SolveLp)->Arg(5)->Arg(20);

void BM_SolveQp(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const MatrixXd b = MatrixXd::NullaryExpr(2, n, [&](Eigen::Index, Eigen::Index) { return u(rng); });
  cia::cvx::SimplexQP qp;
  qp.hessian = b.transpose() * b;
  qp.linear = VectorXd::NullaryExpr(n, [&](Eigen::Index) { return u(rng); });
  qp.eq_matrix = MatrixXd::Ones(1, n);
  qp.eq_rhs = VectorXd::Ones(1);
  for (auto _ : state) benchmark::DoNotOptimize(cia::cvx::solve_qp(qp).objective);
}
BENCHMARK(BM_SolveQp)->Arg(5)->Arg(20);

void BM_Rounding(benchmark::State& state) {
  const auto cells = state.range(0);
  const auto grid = cia::RoundingGrid::uniform(0, 1, cells);
  std::mt19937_64 rng(9);
  std::exponential_distribution<double> e(1.0);
  MatrixXd a(5, cells);
  for (Eigen::Index k = 0; k < cells; ++k) {
    for (Eigen::Index i = 0; i < 5; ++i) a(i, k) = e(rng);
    a.col(k) /= a.col(k).sum();
  }
  const cia::RelaxedControl alpha(grid, a);
  cia::RoundingConfig cfg;
  cfg.algorithm = state.range(1) == 0 ? cia::RoundingAlgorithm::kSur : cia::RoundingAlgorithm::kNfr;
  for (auto _ : state) benchmark::DoNotOptimize(cia::round(grid, alpha, cfg).distance);
  state.SetItemsProcessed(state.iterations() * cells);
}
BENCHMARK(BM_Rounding)->Args({256, 0})->Args({4096, 0})->Args({256, 1})->Args({4096, 1});

void BM_SrpValueGrad(benchmark::State& state) {
  const auto cfg = cia::default_srp_config();
  const cia::SrpOracle oracle(cfg.srp);
  const auto grid = cia::RoundingGrid::uniform(cfg.srp.t0, cfg.srp.tf, state.range(0));
  const auto v = cia::PiecewiseConstantControl::constant(grid, VectorXd::Constant(1, 0.1));
  oracle.value_grad(v);
  for (auto _ : state) benchmark::DoNotOptimize(oracle.value_grad(v).value);
}
BENCHMARK(BM_SrpValueGrad)->Arg(128)->Arg(1024);

void BM_LvpValueGrad(benchmark::State& state) {
  const auto cfg = cia::default_lvp_config();
  const cia::LvpOracle oracle(cfg.lvp);
  const auto grid = cia::RoundingGrid::uniform(cfg.lvp.t0, cfg.lvp.tf, state.range(0));
  VectorXd u(2);
  u << 0.1, 0.0;
  const auto v = cia::PiecewiseConstantControl::constant(grid, u);
  for (auto _ : state) benchmark::DoNotOptimize(oracle.value_grad(v).value);
}
BENCHMARK(BM_LvpValueGrad)->Arg(128)->Arg(1024);

}  // namespace

BENCHMARK_MAIN();
