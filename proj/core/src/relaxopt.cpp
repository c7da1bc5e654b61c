#include "cia/relaxopt.hpp"

#include "cia/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace cia {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string_view to_string(CertificateStatus status) {
  return status == CertificateStatus::kMet ? "met" : "not_met";
}

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int order) {
  if (order < 1) throw Error(ErrorCode::kInvalidArgument, "quadrature order must be positive");
  if (order == 1) return {{0.0}, {2.0}};
  const auto n = static_cast<std::size_t>(order);
  std::vector<double> nodes(n);
  std::vector<double> weights(n);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double pk = ((2.0 * static_cast<double>(k) - 1.0) * x * p1 - (static_cast<double>(k) - 1.0) * p0) /
                          static_cast<double>(k);
        p0 = p1;
        p1 = pk;
      }
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
  return {nodes, weights};
}

namespace {

void check_horizon(const ObjectiveOracle& oracle, const RoundingGrid& grid) {
  const double tol = 1e-12 * std::max(1.0, oracle.tf() - oracle.t0());
  if (std::abs(grid.t0() - oracle.t0()) > tol || std::abs(grid.tf() - oracle.tf()) > tol) {
    throw Error(ErrorCode::kDomainMismatch, "control grid does not match the problem horizon");
  }
}

void check_control(const ObjectiveOracle& oracle, const PiecewiseConstantControl& v) {
  if (v.dim() != oracle.control_dim()) throw Error(ErrorCode::kInvalidArgument, "control dimension mismatch");
  check_horizon(oracle, v.grid());
}

}  // namespace

ValueGrad ZeroOracle::value_grad(const PiecewiseConstantControl& v) const {
  check_control(*this, v);
  return {0.0, MatrixXd::Zero(v.dim(), static_cast<Index>(v.size()))};
}

SrpOracle::SrpOracle(SrpSettings settings) : settings_(std::move(settings)) {
  const auto& s = settings_;
  if (!(s.tf > s.t0) || !(s.sigma > 0.0) || !(s.truncation > 0.0) || s.observation_cells < 1 || s.eta < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "invalid signal reconstruction settings");
  }
  if (s.target_values.size() != s.target_breakpoints.size() + 1) {
    throw Error(ErrorCode::kInvalidArgument, "target needs one value more than breakpoints");
  }
  std::vector<double> edges{s.t0};
  for (double b : s.target_breakpoints) {
    if (!(b > edges.back()) || !(b < s.tf)) throw Error(ErrorCode::kInvalidArgument, "target breakpoints must increase inside the horizon");
    edges.push_back(b);
  }
  edges.push_back(s.tf);

  const auto [gl_nodes, gl_weights] = gauss_legendre(s.quadrature_order);
  const RoundingGrid obs = RoundingGrid::uniform(s.t0, s.tf, s.observation_cells);
  for (std::size_t k = 0; k < obs.size(); ++k) {
    const double mid = 0.5 * (obs.start(k) + obs.end(k));
    const double half = 0.5 * obs.measure(k);
    for (std::size_t q = 0; q < gl_nodes.size(); ++q) {
      nodes_.push_back(mid + half * gl_nodes[q]);
      weights_.push_back(half * gl_weights[q]);
    }
  }
  target_.resize(nodes_.size());
  for (std::size_t j = 0; j < nodes_.size(); ++j) {
    double y = 0.0;
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) y += s.target_values[p] * kernel_integral(nodes_[j], edges[p], edges[p + 1]);
    target_[j] = y;
  }
}

double SrpOracle::kernel_integral(double t, double a, double b) const {
  const double trunc = settings_.truncation;
  const double lo = std::max(t - b, -trunc);
  const double hi = std::min(t - a, trunc);
  if (!(hi > lo)) return 0.0;
  const double sigma = settings_.sigma;
  const double scale = sigma * std::sqrt(0.5 * std::numbers::pi);
  const double inv = 1.0 / (sigma * std::numbers::sqrt2);
  return scale * (std::erf(hi * inv) - std::erf(lo * inv));
}

std::shared_ptr<const MatrixXd> SrpOracle::convolution(const RoundingGrid& grid) const {
  std::vector<double> key(grid.boundaries().begin(), grid.boundaries().end());
  {
    std::lock_guard lock(cache_mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  auto w = std::make_shared<MatrixXd>(MatrixXd::Zero(static_cast<Index>(nodes_.size()), static_cast<Index>(grid.size())));
  const double trunc = settings_.truncation;
  for (std::size_t j = 0; j < nodes_.size(); ++j) {
    const double t = nodes_[j];
    const auto bnd = grid.boundaries();
    // Only cells meeting [t − trunc, t + trunc] contribute.
    auto first = std::upper_bound(bnd.begin(), bnd.end(), t - trunc);
    std::size_t k = first == bnd.begin() ? 0 : static_cast<std::size_t>(first - bnd.begin() - 1);
    for (; k < grid.size() && grid.start(k) < t + trunc; ++k) {
      (*w)(static_cast<Index>(j), static_cast<Index>(k)) = kernel_integral(t, grid.start(k), grid.end(k));
    }
  }
  std::lock_guard lock(cache_mutex_);
  if (cache_.size() >= 4) cache_.erase(cache_.begin());
  cache_.emplace(std::move(key), w);
  return w;
}

double SrpOracle::value(const PiecewiseConstantControl& v) const {
  check_control(*this, v);
  const auto w = convolution(v.grid());
  const VectorXd y = *w * v.values().row(0).transpose();
  double total = 0.0;
  for (std::size_t j = 0; j < nodes_.size(); ++j) {
    const double r = y(static_cast<Index>(j)) - target_[j];
    total += weights_[j] * r * r;
  }
  return 0.5 * total;
}

ValueGrad SrpOracle::value_grad(const PiecewiseConstantControl& v) const {
  check_control(*this, v);
  const auto w = convolution(v.grid());
  const VectorXd y = *w * v.values().row(0).transpose();
  VectorXd weighted(static_cast<Index>(nodes_.size()));
  double total = 0.0;
  for (std::size_t j = 0; j < nodes_.size(); ++j) {
    const double r = y(static_cast<Index>(j)) - target_[j];
    total += weights_[j] * r * r;
    weighted(static_cast<Index>(j)) = weights_[j] * r;
  }
  ValueGrad out;
  out.value = 0.5 * total;
  out.gradient = (w->transpose() * weighted).transpose();
  for (std::size_t k = 0; k < v.size(); ++k) out.gradient(0, static_cast<Index>(k)) /= v.grid().measure(k);
  return out;
}

namespace {

using State = Eigen::Vector3d;  // (y1, y2, accumulated cost)

State lvp_rhs(const State& x, double v1, double v2) {
  const double y1 = x(0);
  const double y2 = x(1);
  return {y1 - y1 * y2 - y1 * v1, -y2 + y1 * y2 - y2 * v2, (y1 - 1.0) * (y1 - 1.0) + (y2 - 1.0) * (y2 - 1.0)};
}

// λ ↦ f_xᵀ λ
State lvp_rhs_state_adjoint(const State& x, double v1, double v2, const State& lam) {
  const double y1 = x(0);
  const double y2 = x(1);
  return {(1.0 - y2 - v1) * lam(0) + y2 * lam(1) + 2.0 * (y1 - 1.0) * lam(2),
          -y1 * lam(0) + (-1.0 + y1 - v2) * lam(1) + 2.0 * (y2 - 1.0) * lam(2), 0.0};
}

// λ ↦ f_vᵀ λ
Eigen::Vector2d lvp_rhs_control_adjoint(const State& x, const State& lam) { return {-x(0) * lam(0), -x(1) * lam(1)}; }

State rk4_step(const State& x, double h, double v1, double v2) {
  const State k1 = lvp_rhs(x, v1, v2);
  const State k2 = lvp_rhs(x + 0.5 * h * k1, v1, v2);
  const State k3 = lvp_rhs(x + 0.5 * h * k2, v1, v2);
  const State k4 = lvp_rhs(x + h * k3, v1, v2);
  return x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

LvpOracle::LvpOracle(LvpSettings settings) : settings_(std::move(settings)) {
  if (!(settings_.tf > settings_.t0) || settings_.rk4_steps_per_cell < 1 || settings_.eta < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "invalid Lotka-Volterra settings");
  }
}

namespace {

void check_state(const State& x, double limit) {
  if (!x.allFinite() || std::abs(x(0)) > limit || std::abs(x(1)) > limit) {
    throw Error(ErrorCode::kDiverged, "Lotka-Volterra state left the admissible range");
  }
}

}  // namespace

double LvpOracle::value(const PiecewiseConstantControl& v) const {
  check_control(*this, v);
  State x(settings_.initial_state(0), settings_.initial_state(1), 0.0);
  const int steps = settings_.rk4_steps_per_cell;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double h = v.grid().measure(k) / steps;
    const double v1 = v.value(k)(0);
    const double v2 = v.value(k)(1);
    for (int s = 0; s < steps; ++s) x = rk4_step(x, h, v1, v2);
    check_state(x, settings_.divergence_limit);
  }
  return x(2);
}

std::vector<Eigen::Vector2d> LvpOracle::trajectory(const PiecewiseConstantControl& v) const {
  check_control(*this, v);
  State x(settings_.initial_state(0), settings_.initial_state(1), 0.0);
  std::vector<Eigen::Vector2d> out{x.head<2>()};
  const int steps = settings_.rk4_steps_per_cell;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double h = v.grid().measure(k) / steps;
    for (int s = 0; s < steps; ++s) x = rk4_step(x, h, v.value(k)(0), v.value(k)(1));
    check_state(x, settings_.divergence_limit);
    out.emplace_back(x.head<2>());
  }
  return out;
}

ValueGrad LvpOracle::value_grad(const PiecewiseConstantControl& v) const {
  check_control(*this, v);
  const int steps = settings_.rk4_steps_per_cell;
  const std::size_t n = v.size();
  std::vector<State> states;
  states.reserve(n * static_cast<std::size_t>(steps) + 1);
  State x(settings_.initial_state(0), settings_.initial_state(1), 0.0);
  states.push_back(x);
  for (std::size_t k = 0; k < n; ++k) {
    const double h = v.grid().measure(k) / steps;
    for (int s = 0; s < steps; ++s) {
      x = rk4_step(x, h, v.value(k)(0), v.value(k)(1));
      states.push_back(x);
    }
    check_state(x, settings_.divergence_limit);
  }

  ValueGrad out;
  out.value = x(2);
  out.gradient = MatrixXd::Zero(2, static_cast<Index>(n));
  // Reverse sweep through the RK4 stages; J = z(tf).
  State lam(0.0, 0.0, 1.0);
  for (std::size_t kk = n; kk-- > 0;) {
    const double h = v.grid().measure(kk) / steps;
    const double v1 = v.value(kk)(0);
    const double v2 = v.value(kk)(1);
    Eigen::Vector2d grad_v = Eigen::Vector2d::Zero();
    for (int s = steps; s-- > 0;) {
      const State& x1 = states[kk * static_cast<std::size_t>(steps) + static_cast<std::size_t>(s)];
      const State k1 = lvp_rhs(x1, v1, v2);
      const State x2 = x1 + 0.5 * h * k1;
      const State k2 = lvp_rhs(x2, v1, v2);
      const State x3 = x1 + 0.5 * h * k2;
      const State k3 = lvp_rhs(x3, v1, v2);
      const State x4 = x1 + h * k3;

      const State k4_bar = h / 6.0 * lam;
      const State mu4 = lvp_rhs_state_adjoint(x4, v1, v2, k4_bar);
      grad_v += lvp_rhs_control_adjoint(x4, k4_bar);
      const State k3_bar = h / 3.0 * lam + h * mu4;
      const State mu3 = lvp_rhs_state_adjoint(x3, v1, v2, k3_bar);
      grad_v += lvp_rhs_control_adjoint(x3, k3_bar);
      const State k2_bar = h / 3.0 * lam + 0.5 * h * mu3;
      const State mu2 = lvp_rhs_state_adjoint(x2, v1, v2, k2_bar);
      grad_v += lvp_rhs_control_adjoint(x2, k2_bar);
      const State k1_bar = h / 6.0 * lam + 0.5 * h * mu2;
      const State mu1 = lvp_rhs_state_adjoint(x1, v1, v2, k1_bar);
      grad_v += lvp_rhs_control_adjoint(x1, k1_bar);

      lam += mu1 + mu2 + mu3 + mu4;
    }
    out.gradient.col(static_cast<Index>(kk)) = grad_v / v.grid().measure(kk);
  }
  return out;
}

ValueGrad smoothed_objective(const ObjectiveOracle& oracle, const SmoothedRegularizer& sm,
                             const PiecewiseConstantControl& v) {
  ValueGrad out = oracle.value_grad(v);
  const double eta = oracle.eta();
  double reg = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const SmoothValue s = smoothed_eval(sm, v.value(k));
    reg += v.grid().measure(k) * s.value;
    out.gradient.col(static_cast<Index>(k)) += eta * s.gradient;
  }
  out.value += eta * reg;
  return out;
}

double exact_objective(const ObjectiveOracle& oracle, const RegularizerSpec& spec, const PiecewiseConstantControl& v) {
  return oracle.value(v) + oracle.eta() * integrate_R(spec, v);
}

double frank_wolfe_gap(const RegularizerSpec& spec, const PiecewiseConstantControl& v, const MatrixXd& gradient) {
  double gap = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const auto g = gradient.col(static_cast<Index>(k));
    const double best_vertex = (g.transpose() * spec.bangs()).minCoeff();
    gap += v.grid().measure(k) * (g.dot(v.value(k)) - best_vertex);
  }
  return gap;
}

PiecewiseConstantControl project_control(const RegularizerSpec& spec, const PiecewiseConstantControl& v) {
  MatrixXd values(v.dim(), static_cast<Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) values.col(static_cast<Index>(k)) = spec.project(v.value(k));
  return {v.grid(), std::move(values)};
}

double gradient_mapping_norm(const RegularizerSpec& spec, const PiecewiseConstantControl& v, const MatrixXd& gradient) {
  const PiecewiseConstantControl moved(v.grid(), v.values() - gradient);
  return l2_distance(v, project_control(spec, moved));
}

namespace {

double l2_inner(const RoundingGrid& grid, const MatrixXd& a, const MatrixXd& b) {
  double sum = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    sum += grid.measure(k) * a.col(static_cast<Index>(k)).dot(b.col(static_cast<Index>(k)));
  }
  return sum;
}

}  // namespace

RelaxationResult solve_relaxation(const ObjectiveOracle& oracle, const SmoothedRegularizer& sm, const RoundingGrid& grid,
                                  const SolveSettings& settings, const PiecewiseConstantControl* initial) {
  if (!(settings.epsilon > 0.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive");
  const RegularizerSpec& spec = sm.spec();
  if (spec.dim() != oracle.control_dim()) throw Error(ErrorCode::kInvalidArgument, "bang dimension differs from the control dimension");
  check_horizon(oracle, grid);

  PiecewiseConstantControl v = initial != nullptr
                                   ? project_control(spec, average_onto(*initial, grid))
                                   : project_control(spec, PiecewiseConstantControl::constant(grid, spec.bangs().rowwise().mean()));
  ValueGrad cur = smoothed_objective(oracle, sm, v);

  Certificate cert;
  cert.kind = oracle.convex() ? CertificateKind::kFrankWolfeGap : CertificateKind::kStationarity;
  cert.local_only = !oracle.convex();
  auto measure = [&](const PiecewiseConstantControl& x, const MatrixXd& g) {
    return oracle.convex() ? frank_wolfe_gap(spec, x, g) : gradient_mapping_norm(spec, x, g);
  };

  double step = settings.initial_step;
  MatrixXd prev_values;
  MatrixXd prev_grad;
  int it = 0;
  for (;; ++it) {
    cert.measure = measure(v, cur.gradient);
    if (cert.measure < settings.epsilon) {
      cert.status = CertificateStatus::kMet;
      break;
    }
    if (it >= settings.max_iterations) break;

    if (it > 0) {
      // Barzilai–Borwein trial step from the last accepted move.
      const MatrixXd dv = v.values() - prev_values;
      const MatrixXd dg = cur.gradient - prev_grad;
      const double curvature = l2_inner(grid, dv, dg);
      const double bb = curvature > 0.0 ? l2_inner(grid, dv, dv) / curvature : settings.initial_step;
      step = std::isfinite(bb) ? std::clamp(bb, 1e-12, 1e12) : settings.initial_step;
    }

    bool accepted = false;
    for (int bt = 0; bt < settings.max_backtracks; ++bt, step *= settings.backtrack) {
      PiecewiseConstantControl trial = project_control(spec, PiecewiseConstantControl(grid, v.values() - step * cur.gradient));
      const MatrixXd d = trial.values() - v.values();
      const double slope = l2_inner(grid, cur.gradient, d);
      if (!(slope < 0.0)) break;  // no descent left at this resolution
      ValueGrad next = smoothed_objective(oracle, sm, trial);
      if (next.value <= cur.value + settings.armijo_c1 * slope) {
        prev_values = v.values();
        prev_grad = cur.gradient;
        v = std::move(trial);
        cur = std::move(next);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      cert.measure = measure(v, cur.gradient);
      if (cert.measure < settings.epsilon) cert.status = CertificateStatus::kMet;
      break;
    }
  }
  cert.iterations = it;
  return {std::move(v), cur.value, cert};
}

}  // namespace cia
