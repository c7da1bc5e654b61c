#include "cia/multibang.hpp"

#include "cia/cvxsolve.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace cia {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

using Point2 = Eigen::Vector2d;

double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

// Andrew's monotone chain; counter-clockwise, no collinear points.
std::vector<Point2> convex_polygon(const MatrixXd& bangs) {
  std::vector<Point2> pts;
  for (Index j = 0; j < bangs.cols(); ++j) pts.emplace_back(bangs(0, j), bangs(1, j));
  std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    const auto& p = pts[i - 1];
    while (k >= t && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  hull.resize(k > 0 ? k - 1 : 0);
  return hull;
}

Point2 project_segment(const Point2& a, const Point2& b, const Point2& p) {
  const Point2 d = b - a;
  const double t = std::clamp((p - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
  return a + t * d;
}

}  // namespace

struct RegularizerSpec::Data {
  MatrixXd bangs;
  VectorXd weights;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<Point2> polygon;
};

ValidationReport validate_spec(const MatrixXd& bangs, const VectorXd& weights) {
  ValidationReport report;
  auto fail = [&](ErrorCode code, std::string message) {
    report.valid = false;
    report.error = code;
    report.message = std::move(message);
  };
  const Index m = bangs.rows();
  const Index count = bangs.cols();
  if (m < 1 || count < 2 || weights.size() != count) {
    fail(ErrorCode::kInvalidArgument, "need at least two bangs and one weight per bang");
    return report;
  }
  if (!bangs.allFinite() || !weights.allFinite()) {
    fail(ErrorCode::kInvalidArgument, "bangs and weights must be finite");
    return report;
  }
  for (Index j = 1; j < count; ++j) {
    for (Index i = 0; i < j; ++i) {
      const double scale = std::max({1.0, bangs.col(i).norm(), bangs.col(j).norm()});
      if ((bangs.col(i) - bangs.col(j)).norm() <= 1e-12 * scale) {
        report.violating.push_back(static_cast<int>(j));
        break;
      }
    }
  }
  if (!report.violating.empty()) {
    fail(ErrorCode::kDuplicateBang, "bang " + std::to_string(report.violating.front()) + " repeats an earlier bang");
    return report;
  }
  for (Index i = 0; i < count; ++i) {
    if (weights(i) < 0.0) report.violating.push_back(static_cast<int>(i));
  }
  if (!report.violating.empty()) {
    fail(ErrorCode::kNegativeWeight, "weight " + std::to_string(report.violating.front()) + " is negative");
    return report;
  }
  // (ν_i, g_i) is extremal iff it is not a convex combination of the other
  // lifted bangs plus a nonnegative vertical offset r.
  for (Index i = 0; i < count; ++i) {
    cvx::LinearProgram lp;
    lp.cost = VectorXd::Zero(count);  // λ_j for j ≠ i, then r
    lp.eq_matrix = MatrixXd::Zero(m + 2, count);
    lp.eq_rhs = VectorXd::Zero(m + 2);
    Index col = 0;
    for (Index j = 0; j < count; ++j) {
      if (j == i) continue;
      lp.eq_matrix.block(0, col, m, 1) = bangs.col(j);
      lp.eq_matrix(m, col) = weights(j);
      lp.eq_matrix(m + 1, col) = 1.0;
      ++col;
    }
    lp.eq_matrix(m, col) = 1.0;
    lp.eq_rhs.head(m) = bangs.col(i);
    lp.eq_rhs(m) = weights(i);
    lp.eq_rhs(m + 1) = 1.0;
    const auto res = cvx::solve_lp(lp);
    if (res.status != cvx::SolveStatus::kInfeasible) report.violating.push_back(static_cast<int>(i));
  }
  if (!report.violating.empty()) {
    fail(ErrorCode::kNotExtremal,
         "lifted bang " + std::to_string(report.violating.front()) + " is not an extremal point");
  }
  return report;
}

RegularizerSpec RegularizerSpec::create(MatrixXd bangs, VectorXd weights) {
  const ValidationReport report = validate_spec(bangs, weights);
  if (!report.valid) {
    std::optional<int> index;
    if (!report.violating.empty()) index = report.violating.front();
    throw Error(*report.error, report.message, index);
  }
  auto data = std::make_shared<Data>();
  data->bangs = std::move(bangs);
  data->weights = std::move(weights);
  if (data->bangs.rows() == 1) {
    data->lo = data->bangs.row(0).minCoeff();
    data->hi = data->bangs.row(0).maxCoeff();
  } else if (data->bangs.rows() == 2) {
    data->polygon = convex_polygon(data->bangs);
    if (data->polygon.size() < 3) data->polygon.clear();
  }
  return RegularizerSpec(std::move(data));
}

RegularizerSpec RegularizerSpec::scalar(const std::vector<double>& bangs, const std::vector<double>& weights) {
  MatrixXd v(1, static_cast<Index>(bangs.size()));
  for (std::size_t i = 0; i < bangs.size(); ++i) v(0, static_cast<Index>(i)) = bangs[i];
  return create(std::move(v), Eigen::Map<const VectorXd>(weights.data(), static_cast<Index>(weights.size())));
}

Index RegularizerSpec::dim() const { return data_->bangs.rows(); }
Index RegularizerSpec::count() const { return data_->bangs.cols(); }
const MatrixXd& RegularizerSpec::bangs() const { return data_->bangs; }
const VectorXd& RegularizerSpec::weights() const { return data_->weights; }

VectorXd RegularizerSpec::project(const VectorXd& u) const {
  if (u.size() != dim()) throw Error(ErrorCode::kInvalidArgument, "point dimension differs from the bangs");
  if (dim() == 1) return VectorXd::Constant(1, std::clamp(u(0), data_->lo, data_->hi));
  if (dim() == 2 && !data_->polygon.empty()) {
    const auto& poly = data_->polygon;
    const Point2 p(u(0), u(1));
    bool inside = true;
    for (std::size_t k = 0; k < poly.size(); ++k) {
      if (cross(poly[k], poly[(k + 1) % poly.size()], p) < 0.0) {
        inside = false;
        break;
      }
    }
    if (inside) return u;
    Point2 best = poly[0];
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < poly.size(); ++k) {
      const Point2 q = project_segment(poly[k], poly[(k + 1) % poly.size()], p);
      const double d = (q - p).squaredNorm();
      if (d < best_dist) {
        best_dist = d;
        best = q;
      }
    }
    return VectorXd(best);
  }
  return bangs() * cvx::project_onto_hull_weights(bangs(), u);
}

bool RegularizerSpec::contains(const VectorXd& u, double tol) const {
  return (project(u) - u).norm() <= tol;
}

VectorXd project_hull(const RegularizerSpec& spec, const VectorXd& u) { return spec.project(u); }

namespace {

// u itself when inside conv V, its projection when within kHullTolerance.
VectorXd admissible_point(const RegularizerSpec& spec, const VectorXd& u) {
  if (u.size() != spec.dim()) throw Error(ErrorCode::kInvalidArgument, "point dimension differs from the bangs");
  if (!u.allFinite()) throw Error(ErrorCode::kInvalidArgument, "point must be finite");
  VectorXd p = spec.project(u);
  const double dist = (p - u).norm();
  if (dist > kHullTolerance) {
    throw Error(ErrorCode::kOutsideHull, "point lies outside the convex hull of the bangs");
  }
  if (spec.dim() <= 2) return dist == 0.0 ? u : p;
  return p;
}

EnvelopeValue solve_envelope_lp(const RegularizerSpec& spec, const VectorXd& p) {
  const Index m = spec.dim();
  const Index count = spec.count();
  cvx::LinearProgram lp;
  lp.cost = spec.weights();
  lp.eq_matrix.resize(m + 1, count);
  lp.eq_matrix.topRows(m) = spec.bangs();
  lp.eq_matrix.row(m).setOnes();
  lp.eq_rhs.resize(m + 1);
  lp.eq_rhs.head(m) = p;
  lp.eq_rhs(m) = 1.0;
  const auto res = cvx::solve_lp(lp);
  if (res.status == cvx::SolveStatus::kInfeasible) {
    throw Error(ErrorCode::kOutsideHull, "point lies outside the convex hull of the bangs");
  }
  if (!res.optimal()) throw Error(ErrorCode::kIterationLimit, "envelope LP did not terminate");
  return {spec.weights().dot(res.x), res.x};
}

}  // namespace

EnvelopeValue eval_g(const RegularizerSpec& spec, const VectorXd& u) {
  return solve_envelope_lp(spec, admissible_point(spec, u));
}

VectorXd select_coefficients(const RegularizerSpec& spec, const VectorXd& u) {
  const VectorXd p = admissible_point(spec, u);
  const EnvelopeValue ev = solve_envelope_lp(spec, p);
  const Index m = spec.dim();
  const Index count = spec.count();
  // Minimum-norm point of the optimal face {α ∈ Δ_M : Vα = u, gᵀα = g(u)}.
  cvx::SimplexQP qp;
  qp.hessian = MatrixXd::Identity(count, count);
  qp.linear = VectorXd::Zero(count);
  qp.eq_matrix.resize(m + 2, count);
  qp.eq_matrix.topRows(m) = spec.bangs();
  qp.eq_matrix.row(m).setOnes();
  qp.eq_matrix.row(m + 1) = spec.weights().transpose();
  qp.eq_rhs.resize(m + 2);
  qp.eq_rhs.head(m) = p;
  qp.eq_rhs(m) = 1.0;
  qp.eq_rhs(m + 1) = ev.value;
  qp.start = ev.alpha;
  const auto res = cvx::solve_qp(qp);
  if (!res.optimal()) throw Error(ErrorCode::kIterationLimit, "selector QP did not converge");
  return res.x;
}

double lipschitz_constant(const RegularizerSpec& spec) {
  if (spec.dim() == 1) return ScalarEnvelope::from_spec(spec).lipschitz();
  const MatrixXd& v = spec.bangs();
  const VectorXd& g = spec.weights();
  const VectorXd center = v.rowwise().mean();
  const MatrixXd centered = v.colwise() - center;
  Eigen::JacobiSVD<MatrixXd> svd(centered, Eigen::ComputeThinU);
  const VectorXd& s = svd.singularValues();
  Index rank = 0;
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > 1e-10 * std::max(1.0, s(0))) ++rank;
  }
  // Coordinates in the affine span of the bangs.
  const MatrixXd coords = svd.matrixU().leftCols(rank).transpose() * centered;
  const Index count = spec.count();
  const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
  double best = 0.0;
  std::vector<bool> pick(static_cast<std::size_t>(count), false);
  std::fill(pick.begin(), pick.begin() + rank + 1, true);
  // Every supporting hyperplane through rank+1 lifted bangs is an affine piece of g.
  do {
    MatrixXd sys(rank + 1, rank + 1);
    VectorXd rhs(rank + 1);
    Index row = 0;
    for (Index j = 0; j < count; ++j) {
      if (!pick[static_cast<std::size_t>(j)]) continue;
      sys.block(row, 0, 1, rank) = coords.col(j).transpose();
      sys(row, rank) = 1.0;
      rhs(row) = g(j);
      ++row;
    }
    Eigen::FullPivLU<MatrixXd> lu(sys);
    if (lu.rank() < rank + 1) continue;
    const VectorXd sol = lu.solve(rhs);
    const VectorXd slope = sol.head(rank);
    bool supporting = true;
    for (Index j = 0; j < count && supporting; ++j) {
      supporting = slope.dot(coords.col(j)) + sol(rank) <= g(j) + 1e-9 * scale;
    }
    if (supporting) best = std::max(best, slope.norm());
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return best;
}

ScalarEnvelope::ScalarEnvelope(std::vector<double> bangs, std::vector<double> weights) {
  if (bangs.size() < 2 || bangs.size() != weights.size()) {
    throw Error(ErrorCode::kInvalidArgument, "scalar envelope needs at least two bangs with weights");
  }
  std::vector<std::size_t> order(bangs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return bangs[a] < bangs[b]; });
  for (std::size_t i : order) {
    bangs_.push_back(bangs[i]);
    weights_.push_back(weights[i]);
  }
  for (std::size_t i = 0; i + 1 < bangs_.size(); ++i) {
    const double h = bangs_[i + 1] - bangs_[i];
    if (!(h > 0.0)) throw Error(ErrorCode::kDuplicateBang, "scalar bangs must be distinct");
    slopes_.push_back((weights_[i + 1] - weights_[i]) / h);
  }
  for (std::size_t i = 0; i + 1 < slopes_.size(); ++i) {
    if (slopes_[i + 1] < slopes_[i] - 1e-12 * std::max(1.0, std::abs(slopes_[i]))) {
      throw Error(ErrorCode::kNotExtremal, "scalar envelope slopes must be nondecreasing",
                  static_cast<int>(i + 1));
    }
  }
}

ScalarEnvelope ScalarEnvelope::from_spec(const RegularizerSpec& spec) {
  if (spec.dim() != 1) throw Error(ErrorCode::kUnsupportedSpec, "scalar envelope needs one-dimensional bangs");
  const VectorXd row = spec.bangs().row(0).transpose();
  return ScalarEnvelope(std::vector<double>(row.data(), row.data() + row.size()),
                        std::vector<double>(spec.weights().data(), spec.weights().data() + spec.count()));
}

double ScalarEnvelope::lipschitz() const {
  double best = 0.0;
  for (double s : slopes_) best = std::max(best, std::abs(s));
  return best;
}

std::size_t ScalarEnvelope::segment(double u) const {
  const auto it = std::upper_bound(bangs_.begin(), bangs_.end(), u);
  const auto idx = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - bangs_.begin() - 1));
  return std::min(idx, bangs_.size() - 2);
}

namespace {

double clamp_scalar(const ScalarEnvelope& env, double u) {
  const double lo = env.bangs().front();
  const double hi = env.bangs().back();
  if (!std::isfinite(u) || u < lo - kHullTolerance || u > hi + kHullTolerance) {
    throw Error(ErrorCode::kOutsideHull, "point lies outside [ν_1, ν_M]");
  }
  return std::clamp(u, lo, hi);
}

}  // namespace

double eval_g_scalar_closed_form(const ScalarEnvelope& env, double u) {
  u = clamp_scalar(env, u);
  if (u == env.bangs().back()) return env.weights().back();
  const std::size_t i = env.segment(u);
  return env.weights()[i] + env.slopes()[i] * (u - env.bangs()[i]);
}

SmoothedRegularizer SmoothedRegularizer::create(RegularizerSpec spec, double gamma, SmoothingMode mode) {
  if (!std::isfinite(gamma) || gamma <= 0.0) throw Error(ErrorCode::kBadGamma, "smoothing parameter must be positive");
  SmoothedRegularizer sm(std::move(spec), gamma, mode);
  if (mode == SmoothingMode::kRamp1d) {
    if (sm.spec_.dim() != 1) throw Error(ErrorCode::kUnsupportedSpec, "ramp smoothing needs scalar bangs");
    auto env = std::make_shared<const ScalarEnvelope>(ScalarEnvelope::from_spec(sm.spec_));
    const auto& nu = env->bangs();
    const auto& slopes = env->slopes();
    double min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < nu.size(); ++i) min_gap = std::min(min_gap, nu[i + 1] - nu[i]);
    if (gamma >= min_gap) throw Error(ErrorCode::kBadGamma, "ramp width must be below the smallest bang gap");
    std::vector<double> knots(nu.size());
    knots[0] = env->weights()[0];
    knots[1] = knots[0] + slopes[0] * (nu[1] - nu[0]);
    for (std::size_t i = 1; i + 1 < nu.size(); ++i) {
      knots[i + 1] = knots[i] + 0.5 * gamma * (slopes[i - 1] + slopes[i]) + slopes[i] * (nu[i + 1] - nu[i] - gamma);
    }
    sm.envelope_ = std::move(env);
    sm.knot_values_ = std::move(knots);
  }
  return sm;
}

SmoothValue moreau_eval(const SmoothedRegularizer& sm, const VectorXd& u) {
  const RegularizerSpec& spec = sm.spec();
  const VectorXd p = admissible_point(spec, u);
  const double gamma = sm.gamma();
  const MatrixXd& v = spec.bangs();
  const VectorXd& g = spec.weights();
  // min over α ∈ Δ_M of gᵀα + ‖p − Vα‖²/(2γ)
  const VectorXd vertex_cost = g + (v.colwise() - p).colwise().squaredNorm().transpose() / (2.0 * gamma);
  Index best = 0;
  vertex_cost.minCoeff(&best);
  cvx::SimplexQP qp;
  qp.hessian = v.transpose() * v / gamma;
  qp.linear = g - v.transpose() * p / gamma;
  qp.eq_matrix = MatrixXd::Ones(1, spec.count());
  qp.eq_rhs = VectorXd::Ones(1);
  qp.start = VectorXd::Unit(spec.count(), best);
  const auto res = cvx::solve_qp(qp);
  if (!res.optimal()) throw Error(ErrorCode::kIterationLimit, "proximal QP did not converge");
  SmoothValue out;
  out.prox_point = v * res.x;
  const VectorXd residual = p - out.prox_point;
  out.value = g.dot(res.x) + residual.squaredNorm() / (2.0 * gamma);
  out.gradient = residual / gamma;
  return out;
}

RampValue ramp1d_eval(const SmoothedRegularizer& sm, double u) {
  if (sm.mode() != SmoothingMode::kRamp1d) throw Error(ErrorCode::kUnsupportedSpec, "regularizer is not ramp-smoothed");
  const ScalarEnvelope& env = sm.envelope();
  u = clamp_scalar(env, u);
  const auto& nu = env.bangs();
  const auto& slopes = env.slopes();
  const auto& knots = sm.knot_values();
  const double gamma = sm.gamma();
  const std::size_t i = env.segment(u);
  const double s = u - nu[i];
  if (i == 0) return {knots[0] + slopes[0] * s, slopes[0]};
  if (s < gamma) {
    const double jump = slopes[i] - slopes[i - 1];
    return {knots[i] + slopes[i - 1] * s + jump * s * s / (2.0 * gamma), slopes[i - 1] + jump * s / gamma};
  }
  return {knots[i] + 0.5 * gamma * (slopes[i - 1] + slopes[i]) + slopes[i] * (s - gamma), slopes[i]};
}

SmoothValue smoothed_eval(const SmoothedRegularizer& sm, const VectorXd& u) {
  if (sm.mode() == SmoothingMode::kMoreau) return moreau_eval(sm, u);
  if (u.size() != 1) throw Error(ErrorCode::kInvalidArgument, "ramp smoothing takes scalar points");
  const RampValue r = ramp1d_eval(sm, u(0));
  const double clamped = std::clamp(u(0), sm.envelope().bangs().front(), sm.envelope().bangs().back());
  return {r.value, VectorXd::Constant(1, r.derivative), VectorXd::Constant(1, clamped)};
}

double integrate_R(const RegularizerSpec& spec, const PiecewiseConstantControl& v) {
  double total = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) total += v.grid().measure(k) * eval_g(spec, v.value(k)).value;
  return total;
}

double integrate_R(const SmoothedRegularizer& sm, const PiecewiseConstantControl& v) {
  double total = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) total += v.grid().measure(k) * smoothed_eval(sm, v.value(k)).value;
  return total;
}

PiecewiseConstantControl bang_combination(const RegularizerSpec& spec, const RelaxedControl& alpha) {
  if (alpha.count() != spec.count()) throw Error(ErrorCode::kInvalidArgument, "coefficient count differs from bang count");
  return {alpha.grid(), spec.bangs() * alpha.coefficients()};
}

PiecewiseConstantControl bang_combination(const RegularizerSpec& spec, const BinaryControl& omega) {
  if (omega.count() != spec.count()) throw Error(ErrorCode::kInvalidArgument, "coefficient count differs from bang count");
  MatrixXd values(spec.dim(), static_cast<Index>(omega.grid().size()));
  for (std::size_t k = 0; k < omega.choices().size(); ++k) {
    values.col(static_cast<Index>(k)) = spec.bangs().col(omega.choices()[k]);
  }
  return {omega.grid(), std::move(values)};
}

}  // namespace cia
