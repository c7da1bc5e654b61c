#pragma once

#include "cia/errors.hpp"
#include "cia/grids.hpp"

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace cia {

/// Outcome of checking a candidate bang set. On failure `error` names the
/// first violated condition and `violating` lists every offending bang.
struct ValidationReport {
  bool valid = true;
  std::optional<ErrorCode> error;
  std::vector<int> violating;
  std::string message;
};

/// Bangs ν_1..ν_M as the columns of an m × M matrix together with weights g_i.
/// Valid when the bangs are distinct, g ≥ 0, and every lifted point (ν_i, g_i)
/// is a vertex of conv{(ν_j, g_j)} + {0} × [0, ∞).
ValidationReport validate_spec(const Eigen::MatrixXd& bangs, const Eigen::VectorXd& weights);

/// A validated relaxed multibang regularizer. Immutable; copies share storage.
class RegularizerSpec {
 public:
  /// Throws Error with the code from validate_spec when the data is invalid.
  static RegularizerSpec create(Eigen::MatrixXd bangs, Eigen::VectorXd weights);
  /// Scalar convenience overload (m = 1).
  static RegularizerSpec scalar(const std::vector<double>& bangs, const std::vector<double>& weights);

  Eigen::Index dim() const;
  Eigen::Index count() const;
  const Eigen::MatrixXd& bangs() const;
  const Eigen::VectorXd& weights() const;
  Eigen::VectorXd bang(Eigen::Index i) const { return bangs().col(i); }

  /// True when u ∈ conv V within `tol` in Euclidean distance.
  bool contains(const Eigen::VectorXd& u, double tol = 1e-8) const;
  /// Euclidean projection onto conv V.
  Eigen::VectorXd project(const Eigen::VectorXd& u) const;

 private:
  struct Data;
  explicit RegularizerSpec(std::shared_ptr<const Data> data) : data_(std::move(data)) {}
  std::shared_ptr<const Data> data_;
};

/// Points within this distance outside conv V are projected before evaluation.
inline constexpr double kHullTolerance = 1e-8;

/// project_hull from the solver toolbox: argmin over conv V of ‖u − y‖.
Eigen::VectorXd project_hull(const RegularizerSpec& spec, const Eigen::VectorXd& u);

/// Lipschitz constant of g on conv V (largest gradient norm over its affine pieces).
double lipschitz_constant(const RegularizerSpec& spec);

/// g(u) together with an optimal basic coefficient vector α of the defining LP.
struct EnvelopeValue {
  double value = 0.0;
  Eigen::VectorXd alpha;
};

/// Pointwise convex lower envelope g(u) = min{ Σ α_i g_i : Σ α_i ν_i = u, α ∈ Δ_M }.
EnvelopeValue eval_g(const RegularizerSpec& spec, const Eigen::VectorXd& u);

/// The unique minimum-norm element of the optimal coefficient set G(u).
Eigen::VectorXd select_coefficients(const RegularizerSpec& spec, const Eigen::VectorXd& u);

/// Sorted scalar envelope with the slopes L_i of g on (ν_i, ν_{i+1}).
class ScalarEnvelope {
 public:
  /// Sorts the bangs; requires nondecreasing slopes.
  ScalarEnvelope(std::vector<double> bangs, std::vector<double> weights);
  static ScalarEnvelope from_spec(const RegularizerSpec& spec);

  const std::vector<double>& bangs() const { return bangs_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& slopes() const { return slopes_; }
  /// max_i |L_i|
  double lipschitz() const;
  /// Index i of the segment [ν_i, ν_{i+1}] containing u (u clamped into range).
  std::size_t segment(double u) const;

 private:
  std::vector<double> bangs_;
  std::vector<double> weights_;
  std::vector<double> slopes_;
};

/// g_i + L_i (u − ν_i) on the segment containing u. Throws OutsideHull
/// outside [ν_1, ν_M] (beyond kHullTolerance).
double eval_g_scalar_closed_form(const ScalarEnvelope& env, double u);

enum class SmoothingMode { kMoreau, kRamp1d };

/// g smoothed with parameter γ, either by its Moreau envelope or, for scalar
/// bangs, by the piecewise-quadratic ramp construction.
class SmoothedRegularizer {
 public:
  /// Throws BadGamma for γ ≤ 0 (or γ ≥ min gap for ramp1d) and UnsupportedSpec
  /// for ramp1d with m ≠ 1.
  static SmoothedRegularizer create(RegularizerSpec spec, double gamma, SmoothingMode mode);

  const RegularizerSpec& spec() const { return spec_; }
  double gamma() const { return gamma_; }
  SmoothingMode mode() const { return mode_; }
  /// Only for ramp1d: the sorted envelope and g_γ(ν_i).
  const ScalarEnvelope& envelope() const { return *envelope_; }
  const std::vector<double>& knot_values() const { return knot_values_; }

 private:
  SmoothedRegularizer(RegularizerSpec spec, double gamma, SmoothingMode mode)
      : spec_(std::move(spec)), gamma_(gamma), mode_(mode) {}

  RegularizerSpec spec_;
  double gamma_;
  SmoothingMode mode_;
  std::shared_ptr<const ScalarEnvelope> envelope_;
  std::vector<double> knot_values_;
};

struct SmoothValue {
  double value = 0.0;
  Eigen::VectorXd gradient;
  /// Moreau mode: the proximal point y*. Ramp mode: u itself.
  Eigen::VectorXd prox_point;
};

/// e_γ g(u) = min_y g(y) + ‖u − y‖²/(2γ), solved as a QP over convex weights.
SmoothValue moreau_eval(const SmoothedRegularizer& sm, const Eigen::VectorXd& u);

struct RampValue {
  double value = 0.0;
  double derivative = 0.0;
};

/// g_γ(u) = g_1 + ∫_{ν_1}^u g'_γ, where g'_γ ramps linearly from L_{i−1} to L_i
/// on [ν_i, ν_i + γ) and equals g' elsewhere.
RampValue ramp1d_eval(const SmoothedRegularizer& sm, double u);

/// Dispatches on the smoothing mode.
SmoothValue smoothed_eval(const SmoothedRegularizer& sm, const Eigen::VectorXd& u);

/// R(v) = Σ_k λ(T_k) g(v_k), summed in cell order.
double integrate_R(const RegularizerSpec& spec, const PiecewiseConstantControl& v);
/// R_γ(v) = Σ_k λ(T_k) g_γ(v_k).
double integrate_R(const SmoothedRegularizer& sm, const PiecewiseConstantControl& v);

/// v = Σ_i α_i ν_i cellwise.
PiecewiseConstantControl bang_combination(const RegularizerSpec& spec, const RelaxedControl& alpha);
PiecewiseConstantControl bang_combination(const RegularizerSpec& spec, const BinaryControl& omega);

}  // namespace cia
