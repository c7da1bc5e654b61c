#pragma once

#include "cia/grids.hpp"
#include "cia/multibang.hpp"

#include <Eigen/Dense>

#include <map>
#include <memory>
#include <mutex>
#include <string_view>
#include <utility>
#include <vector>

namespace cia {

struct ValueGrad {
  double value = 0.0;
  /// Per-cell L² gradient (m × N): ∂F/∂v_k divided by λ(T_k).
  Eigen::MatrixXd gradient;
};

/// Smooth objective F over piecewise-constant controls on [t0, tf].
class ObjectiveOracle {
 public:
  virtual ~ObjectiveOracle() = default;

  virtual double value(const PiecewiseConstantControl& v) const { return value_grad(v).value; }
  virtual ValueGrad value_grad(const PiecewiseConstantControl& v) const = 0;
  virtual bool convex() const = 0;
  virtual Eigen::Index control_dim() const = 0;
  virtual double t0() const = 0;
  virtual double tf() const = 0;
  /// Weight η of the regularizer in J = F + ηR.
  virtual double eta() const = 0;
};

/// Gauss–Legendre nodes and weights on [−1, 1].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int order);

/// F ≡ 0 on [t0, tf]; isolates the regularizer.
class ZeroOracle final : public ObjectiveOracle {
 public:
  ZeroOracle(Eigen::Index dim, double t0, double tf, double eta) : dim_(dim), t0_(t0), tf_(tf), eta_(eta) {}

  ValueGrad value_grad(const PiecewiseConstantControl& v) const override;
  bool convex() const override { return true; }
  Eigen::Index control_dim() const override { return dim_; }
  double t0() const override { return t0_; }
  double tf() const override { return tf_; }
  double eta() const override { return eta_; }

 private:
  Eigen::Index dim_;
  double t0_;
  double tf_;
  double eta_;
};

struct SrpSettings {
  double t0 = -1.0;
  double tf = 1.0;
  double eta = 0.01;
  /// Gaussian kernel exp(−t²/(2σ²)) restricted to |t| ≤ truncation.
  double sigma = 0.1;
  double truncation = 0.5;
  int quadrature_order = 3;
  int observation_cells = 256;
  /// Reference signal: values[j] on [breakpoints[j−1], breakpoints[j]),
  /// with t0 and tf as outer breakpoints. f = k * reference.
  std::vector<double> target_breakpoints = {-0.6, -0.2, 0.2, 0.6};
  std::vector<double> target_values = {0.0, 1.0, -0.25, 0.35, -1.0};
};

/// Signal reconstruction: F(v) = ½ ∫ (k * v − f)² dt, with the kernel
/// integrated exactly over every control cell and Gauss–Legendre quadrature
/// for the outer integral on a fixed observation grid.
class SrpOracle final : public ObjectiveOracle {
 public:
  explicit SrpOracle(SrpSettings settings);

  ValueGrad value_grad(const PiecewiseConstantControl& v) const override;
  double value(const PiecewiseConstantControl& v) const override;
  bool convex() const override { return true; }
  Eigen::Index control_dim() const override { return 1; }
  double t0() const override { return settings_.t0; }
  double tf() const override { return settings_.tf; }
  double eta() const override { return settings_.eta; }

  const SrpSettings& settings() const { return settings_; }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& target() const { return target_; }
  /// ∫_a^b k(t − s) ds.
  double kernel_integral(double t, double a, double b) const;
  /// Convolution matrix W (nodes × cells) with y(t_j) = Σ_k W_jk v_k.
  std::shared_ptr<const Eigen::MatrixXd> convolution(const RoundingGrid& grid) const;

 private:
  SrpSettings settings_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
  std::vector<double> target_;
  mutable std::mutex cache_mutex_;
  mutable std::map<std::vector<double>, std::shared_ptr<const Eigen::MatrixXd>> cache_;
};

struct LvpSettings {
  double t0 = 0.0;
  double tf = 12.0;
  double eta = 0.005;
  Eigen::Vector2d initial_state{0.5, 0.7};
  int rk4_steps_per_cell = 4;
  double divergence_limit = 1e6;
};

/// Lotka–Volterra fishing with two controls: F(v) = ∫ ‖y − (1,1)‖² dt, with
/// classic RK4 on the state augmented by the running cost and an exact
/// discrete adjoint for the gradient.
class LvpOracle final : public ObjectiveOracle {
 public:
  explicit LvpOracle(LvpSettings settings);

  ValueGrad value_grad(const PiecewiseConstantControl& v) const override;
  double value(const PiecewiseConstantControl& v) const override;
  bool convex() const override { return false; }
  Eigen::Index control_dim() const override { return 2; }
  double t0() const override { return settings_.t0; }
  double tf() const override { return settings_.tf; }
  double eta() const override { return settings_.eta; }

  const LvpSettings& settings() const { return settings_; }
  /// States y(s_k) at the cell boundaries.
  std::vector<Eigen::Vector2d> trajectory(const PiecewiseConstantControl& v) const;

 private:
  LvpSettings settings_;
};

struct SolveSettings {
  /// Frank–Wolfe gap target (convex) or gradient-mapping norm target.
  double epsilon = 1e-3;
  int max_iterations = 20000;
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
  double initial_step = 1.0;
  int max_backtracks = 60;
};

enum class CertificateKind { kFrankWolfeGap, kStationarity };
enum class CertificateStatus { kMet, kNotMet };

std::string_view to_string(CertificateStatus status);

struct Certificate {
  CertificateKind kind = CertificateKind::kFrankWolfeGap;
  CertificateStatus status = CertificateStatus::kNotMet;
  /// Final FW gap or gradient-mapping norm.
  double measure = 0.0;
  int iterations = 0;
  /// True for nonconvex objectives: only stationarity is certified.
  bool local_only = false;
};

struct RelaxationResult {
  PiecewiseConstantControl v;
  /// J_γ(v) = F(v) + η R_γ(v)
  double objective = 0.0;
  Certificate certificate;
};

/// J_γ(v) and its per-cell gradient.
ValueGrad smoothed_objective(const ObjectiveOracle& oracle, const SmoothedRegularizer& sm,
                             const PiecewiseConstantControl& v);

/// J(v) = F(v) + η R(v) with the exact regularizer.
double exact_objective(const ObjectiveOracle& oracle, const RegularizerSpec& spec, const PiecewiseConstantControl& v);

/// Σ_k λ(T_k) max_i ∇_kᵀ (v_k − ν_i); bounds J_γ(v) − inf J_γ for convex J_γ.
double frank_wolfe_gap(const RegularizerSpec& spec, const PiecewiseConstantControl& v, const Eigen::MatrixXd& gradient);

/// ‖v − P(v − ∇)‖_{L²}, zero exactly at stationary points.
double gradient_mapping_norm(const RegularizerSpec& spec, const PiecewiseConstantControl& v,
                             const Eigen::MatrixXd& gradient);

/// Cellwise projection onto conv V.
PiecewiseConstantControl project_control(const RegularizerSpec& spec, const PiecewiseConstantControl& v);

/// Projected gradient with Armijo backtracking on J_γ over controls on `grid`.
/// `initial` (any grid) is averaged onto `grid` and projected; by default the
/// start is the projection of the bang centroid.
RelaxationResult solve_relaxation(const ObjectiveOracle& oracle, const SmoothedRegularizer& sm, const RoundingGrid& grid,
                                  const SolveSettings& settings, const PiecewiseConstantControl* initial = nullptr);

}  // namespace cia
