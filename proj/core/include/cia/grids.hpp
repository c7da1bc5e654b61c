#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace cia {

/// Ordered partition t0 = s_0 < s_1 < … < s_N = tf of a closed interval.
/// Boundaries are shared and immutable, so copies are cheap.
class RoundingGrid {
 public:
  explicit RoundingGrid(std::vector<double> boundaries);

  /// N equal cells. Boundary k is t0 + span·p/q with p/q the reduced fraction
  /// k/N, so nested uniform grids agree bitwise on shared boundaries.
  static RoundingGrid uniform(double t0, double tf, std::int64_t cells);

  std::size_t size() const { return boundaries_->size() - 1; }
  double t0() const { return boundaries_->front(); }
  double tf() const { return boundaries_->back(); }
  double span() const { return tf() - t0(); }
  double start(std::size_t k) const { return (*boundaries_)[k]; }
  double end(std::size_t k) const { return (*boundaries_)[k + 1]; }
  double measure(std::size_t k) const { return end(k) - start(k); }
  /// Δ_T, the largest cell measure.
  double max_measure() const { return max_measure_; }
  std::span<const double> boundaries() const { return *boundaries_; }

  bool operator==(const RoundingGrid& other) const;

 private:
  std::shared_ptr<const std::vector<double>> boundaries_;
  double max_measure_ = 0.0;
};

/// Order-conserving dissection: grid n splits every base cell into split^n
/// equal parts.
class Dissection {
 public:
  explicit Dissection(RoundingGrid base, int split = 2);

  const RoundingGrid& base() const { return base_; }
  int split() const { return split_; }

 private:
  RoundingGrid base_;
  int split_;
};

/// Largest admissible cell count of a refined grid.
inline constexpr std::int64_t kMaxGridCells = std::int64_t{1} << 26;

RoundingGrid refine(const Dissection& dissection, int grid_index);

/// Piecewise-constant function Ω → R^m; column k holds the value on cell k.
class PiecewiseConstantControl {
 public:
  PiecewiseConstantControl(RoundingGrid grid, Eigen::MatrixXd values);

  static PiecewiseConstantControl constant(RoundingGrid grid, const Eigen::VectorXd& value);

  const RoundingGrid& grid() const { return grid_; }
  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::Index dim() const { return values_.rows(); }
  std::size_t size() const { return grid_.size(); }
  auto value(std::size_t k) const { return values_.col(static_cast<Eigen::Index>(k)); }

  /// ∫_Ω v, componentwise.
  Eigen::VectorXd integral() const;

 private:
  RoundingGrid grid_;
  Eigen::MatrixXd values_;
};

/// Convex-coefficient control α : Ω → [0,1]^M with Σ_i α_i = 1 per cell.
class RelaxedControl {
 public:
  RelaxedControl(RoundingGrid grid, Eigen::MatrixXd coefficients);

  const RoundingGrid& grid() const { return control_.grid(); }
  const Eigen::MatrixXd& coefficients() const { return control_.values(); }
  Eigen::Index count() const { return control_.dim(); }
  const PiecewiseConstantControl& as_control() const { return control_; }

 private:
  PiecewiseConstantControl control_;
};

/// Binary control ω: on every cell exactly one coefficient equals one.
class BinaryControl {
 public:
  BinaryControl(RoundingGrid grid, int count, std::vector<int> choices);

  const RoundingGrid& grid() const { return grid_; }
  int count() const { return count_; }
  const std::vector<int>& choices() const { return choices_; }
  Eigen::MatrixXd coefficients() const;
  PiecewiseConstantControl as_control() const;
  /// ∫_Ω ω_i for every bang i.
  Eigen::VectorXd integral() const;

 private:
  RoundingGrid grid_;
  int count_;
  std::vector<int> choices_;
};

/// Componentwise ∫_{T_j} v for every cell T_j of `target`, by exact interval
/// intersection. Throws DomainMismatch when the intervals differ.
Eigen::MatrixXd cell_integrals(const PiecewiseConstantControl& v, const RoundingGrid& target);

/// Measure-weighted cell means of v on `target`.
PiecewiseConstantControl average_onto(const PiecewiseConstantControl& v, const RoundingGrid& target);

/// Exact ‖a − b‖_{L²(Ω)} over the common refinement of both grids.
double l2_distance(const PiecewiseConstantControl& a, const PiecewiseConstantControl& b);

/// d_T(a, b) = max over prefixes k and components i of |Σ_{l≤k} ∫_{T_l} (a_i − b_i)|.
double pseudometric_dT(const RoundingGrid& grid, const PiecewiseConstantControl& a,
                       const PiecewiseConstantControl& b);
double pseudometric_dT(const RoundingGrid& grid, const RelaxedControl& a, const BinaryControl& b);
double pseudometric_dT(const RoundingGrid& grid, const RelaxedControl& a, const RelaxedControl& b);

}  // namespace cia
