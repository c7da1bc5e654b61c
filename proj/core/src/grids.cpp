#include "cia/grids.hpp"

#include "cia/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace cia {

namespace {

double reduced_point(double a, double b, std::int64_t num, std::int64_t den) {
  if (num == 0) return a;
  if (num == den) return b;
  const std::int64_t g = std::gcd(num, den);
  return a + (b - a) * static_cast<double>(num / g) / static_cast<double>(den / g);
}

void check_same_domain(const RoundingGrid& a, const RoundingGrid& b) {
  const double tol = 1e-12 * std::max(1.0, std::max(std::abs(a.span()), std::abs(b.span())));
  if (std::abs(a.t0() - b.t0()) > tol || std::abs(a.tf() - b.tf()) > tol) {
    throw Error(ErrorCode::kDomainMismatch, "grids cover different intervals");
  }
}

// Calls visit(i, j, length) for every overlap of source cell i and target
// cell j. Both last cells are taken to end at source.tf().
template <typename Visit>
void for_each_overlap(const RoundingGrid& source, const RoundingGrid& target, Visit&& visit) {
  check_same_domain(source, target);
  const std::size_t ns = source.size();
  const std::size_t nt = target.size();
  const double stop = source.tf();
  std::size_t i = 0;
  std::size_t j = 0;
  double cursor = source.t0();
  while (i < ns && j < nt) {
    const double end_i = i + 1 == ns ? stop : source.end(i);
    const double end_j = j + 1 == nt ? stop : target.end(j);
    const double next = std::min(end_i, end_j);
    if (next > cursor) {
      visit(i, j, next - cursor);
      cursor = next;
    }
    if (end_i <= next) ++i;
    if (end_j <= next) ++j;
  }
}

}  // namespace

RoundingGrid::RoundingGrid(std::vector<double> boundaries) {
  if (boundaries.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "a rounding grid needs at least one cell");
  }
  for (std::size_t k = 0; k < boundaries.size(); ++k) {
    if (!std::isfinite(boundaries[k])) {
      throw Error(ErrorCode::kInvalidArgument, "grid boundaries must be finite");
    }
    if (k > 0 && !(boundaries[k] > boundaries[k - 1])) {
      throw Error(ErrorCode::kInvalidArgument, "grid boundaries must be strictly increasing");
    }
  }
  for (std::size_t k = 1; k < boundaries.size(); ++k) {
    max_measure_ = std::max(max_measure_, boundaries[k] - boundaries[k - 1]);
  }
  boundaries_ = std::make_shared<const std::vector<double>>(std::move(boundaries));
}

RoundingGrid RoundingGrid::uniform(double t0, double tf, std::int64_t cells) {
  if (cells < 1) throw Error(ErrorCode::kInvalidArgument, "grid needs at least one cell");
  if (cells > kMaxGridCells) throw Error(ErrorCode::kTooFine, "grid exceeds the cell limit");
  std::vector<double> b(static_cast<std::size_t>(cells) + 1);
  for (std::int64_t k = 0; k <= cells; ++k) b[static_cast<std::size_t>(k)] = reduced_point(t0, tf, k, cells);
  return RoundingGrid(std::move(b));
}

bool RoundingGrid::operator==(const RoundingGrid& other) const {
  return boundaries_ == other.boundaries_ || *boundaries_ == *other.boundaries_;
}

Dissection::Dissection(RoundingGrid base, int split) : base_(std::move(base)), split_(split) {
  if (split < 2) throw Error(ErrorCode::kInvalidArgument, "split factor must be at least 2");
}

RoundingGrid refine(const Dissection& dissection, int grid_index) {
  if (grid_index < 0) throw Error(ErrorCode::kInvalidArgument, "grid index must be nonnegative");
  const RoundingGrid& base = dissection.base();
  if (grid_index == 0) return base;
  std::int64_t parts = 1;
  for (int l = 0; l < grid_index; ++l) {
    parts *= dissection.split();
    if (parts * static_cast<std::int64_t>(base.size()) > kMaxGridCells) {
      throw Error(ErrorCode::kTooFine, "refined grid exceeds 2^26 cells");
    }
  }
  std::vector<double> b;
  b.reserve(base.size() * static_cast<std::size_t>(parts) + 1);
  for (std::size_t k = 0; k < base.size(); ++k) {
    for (std::int64_t p = 0; p < parts; ++p) b.push_back(reduced_point(base.start(k), base.end(k), p, parts));
  }
  b.push_back(base.tf());
  return RoundingGrid(std::move(b));
}

PiecewiseConstantControl::PiecewiseConstantControl(RoundingGrid grid, Eigen::MatrixXd values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (static_cast<std::size_t>(values_.cols()) != grid_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "control needs one value per grid cell");
  }
  if (values_.rows() < 1) throw Error(ErrorCode::kInvalidArgument, "control dimension must be positive");
}

PiecewiseConstantControl PiecewiseConstantControl::constant(RoundingGrid grid, const Eigen::VectorXd& value) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  return {std::move(grid), value.replicate(1, n)};
}

Eigen::VectorXd PiecewiseConstantControl::integral() const {
  Eigen::VectorXd total = Eigen::VectorXd::Zero(dim());
  for (std::size_t k = 0; k < size(); ++k) total += grid_.measure(k) * value(k);
  return total;
}

RelaxedControl::RelaxedControl(RoundingGrid grid, Eigen::MatrixXd coefficients)
    : control_(std::move(grid), std::move(coefficients)) {
  const auto& c = control_.values();
  for (Eigen::Index k = 0; k < c.cols(); ++k) {
    if (std::abs(c.col(k).sum() - 1.0) > 1e-9 || (c.col(k).array() < -1e-12).any() ||
        (c.col(k).array() > 1.0 + 1e-12).any()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "relaxed control coefficients leave the simplex on cell " + std::to_string(k));
    }
  }
}

BinaryControl::BinaryControl(RoundingGrid grid, int count, std::vector<int> choices)
    : grid_(std::move(grid)), count_(count), choices_(std::move(choices)) {
  if (choices_.size() != grid_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "binary control needs one choice per grid cell");
  }
  for (int c : choices_) {
    if (c < 0 || c >= count_) throw Error(ErrorCode::kInvalidArgument, "binary choice out of range");
  }
}

Eigen::MatrixXd BinaryControl::coefficients() const {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(count_, static_cast<Eigen::Index>(choices_.size()));
  for (std::size_t k = 0; k < choices_.size(); ++k) c(choices_[k], static_cast<Eigen::Index>(k)) = 1.0;
  return c;
}

PiecewiseConstantControl BinaryControl::as_control() const { return {grid_, coefficients()}; }

Eigen::VectorXd BinaryControl::integral() const {
  Eigen::VectorXd total = Eigen::VectorXd::Zero(count_);
  for (std::size_t k = 0; k < choices_.size(); ++k) total(choices_[k]) += grid_.measure(k);
  return total;
}

Eigen::MatrixXd cell_integrals(const PiecewiseConstantControl& v, const RoundingGrid& target) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(v.dim(), static_cast<Eigen::Index>(target.size()));
  if (v.grid() == target) {
    for (std::size_t k = 0; k < target.size(); ++k) {
      out.col(static_cast<Eigen::Index>(k)) = target.measure(k) * v.value(k);
    }
    return out;
  }
  for_each_overlap(v.grid(), target, [&](std::size_t i, std::size_t j, double len) {
    out.col(static_cast<Eigen::Index>(j)) += len * v.value(i);
  });
  return out;
}

PiecewiseConstantControl average_onto(const PiecewiseConstantControl& v, const RoundingGrid& target) {
  if (v.grid() == target) return PiecewiseConstantControl(target, v.values());
  Eigen::MatrixXd values = cell_integrals(v, target);
  for (std::size_t k = 0; k < target.size(); ++k) {
    values.col(static_cast<Eigen::Index>(k)) /= target.measure(k);
  }
  return {target, std::move(values)};
}

double l2_distance(const PiecewiseConstantControl& a, const PiecewiseConstantControl& b) {
  if (a.dim() != b.dim()) throw Error(ErrorCode::kInvalidArgument, "controls differ in dimension");
  double sum = 0.0;
  if (a.grid() == b.grid()) {
    for (std::size_t k = 0; k < a.size(); ++k) sum += a.grid().measure(k) * (a.value(k) - b.value(k)).squaredNorm();
    return std::sqrt(sum);
  }
  for_each_overlap(a.grid(), b.grid(), [&](std::size_t i, std::size_t j, double len) {
    sum += len * (a.value(i) - b.value(j)).squaredNorm();
  });
  return std::sqrt(sum);
}

double pseudometric_dT(const RoundingGrid& grid, const PiecewiseConstantControl& a,
                       const PiecewiseConstantControl& b) {
  if (a.dim() != b.dim()) throw Error(ErrorCode::kInvalidArgument, "controls differ in dimension");
  const Eigen::MatrixXd diff = cell_integrals(a, grid) - cell_integrals(b, grid);
  Eigen::VectorXd prefix = Eigen::VectorXd::Zero(diff.rows());
  double worst = 0.0;
  for (Eigen::Index k = 0; k < diff.cols(); ++k) {
    prefix += diff.col(k);
    worst = std::max(worst, prefix.cwiseAbs().maxCoeff());
  }
  return worst;
}

double pseudometric_dT(const RoundingGrid& grid, const RelaxedControl& a, const BinaryControl& b) {
  return pseudometric_dT(grid, a.as_control(), b.as_control());
}

double pseudometric_dT(const RoundingGrid& grid, const RelaxedControl& a, const RelaxedControl& b) {
  return pseudometric_dT(grid, a.as_control(), b.as_control());
}

}  // namespace cia
