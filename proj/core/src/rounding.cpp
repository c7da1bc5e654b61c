#include "cia/rounding.hpp"

#include "cia/errors.hpp"

#include <algorithm>
#include <cassert>
#include <string>

namespace cia {

std::string_view to_string(RoundingAlgorithm algorithm) {
  return algorithm == RoundingAlgorithm::kSur ? "sur" : "nfr";
}

RoundingAlgorithm parse_rounding_algorithm(std::string_view name) {
  if (name == "sur" || name == "SUR") return RoundingAlgorithm::kSur;
  if (name == "nfr" || name == "NFR") return RoundingAlgorithm::kNfr;
  throw Error(ErrorCode::kInvalidArgument, "unknown rounding algorithm '" + std::string(name) + "'");
}

namespace {

void check_grid(const RoundingGrid& grid, const RelaxedControl& alpha) {
  if (!(alpha.grid() == grid)) {
    throw Error(ErrorCode::kDomainMismatch, "relaxed control is not defined on the rounding grid");
  }
}

bool allowed(const RoundingConfig& cfg, const Eigen::MatrixXd& a, Eigen::Index i, Eigen::Index k) {
  return !cfg.zero_mass_preserving || a(i, k) > 0.0;
}

// argmax of the deficit over admissible bangs, lowest index on ties.
Eigen::Index sur_choice(const RoundingConfig& cfg, const Eigen::MatrixXd& a, const Eigen::VectorXd& deficit,
                        Eigen::Index k) {
  Eigen::Index best = -1;
  for (Eigen::Index i = 0; i < deficit.size(); ++i) {
    if (!allowed(cfg, a, i, k)) continue;
    if (best < 0 || deficit(i) > deficit(best)) best = i;
  }
  // A simplex column always has a positive entry.
  assert(best >= 0);
  return best;
}

}  // namespace

BinaryControl round_sur(const RoundingGrid& grid, const RelaxedControl& alpha, const RoundingConfig& cfg) {
  check_grid(grid, alpha);
  const Eigen::MatrixXd& a = alpha.coefficients();
  Eigen::VectorXd deficit = Eigen::VectorXd::Zero(a.rows());
  std::vector<int> choices(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto col = static_cast<Eigen::Index>(k);
    const double len = grid.measure(k);
    deficit += len * a.col(col);
    const Eigen::Index pick = sur_choice(cfg, a, deficit, col);
    deficit(pick) -= len;
    choices[k] = static_cast<int>(pick);
  }
  return {grid, static_cast<int>(a.rows()), std::move(choices)};
}

BinaryControl round_nfr(const RoundingGrid& grid, const RelaxedControl& alpha, const RoundingConfig& cfg) {
  check_grid(grid, alpha);
  const Eigen::MatrixXd& a = alpha.coefficients();
  const Eigen::Index count = a.rows();
  const std::size_t n = grid.size();
  const double bound = grid.max_measure();
  const double slack = 1e-12;

  // cumulative[i][k] = Σ_{l≤k} λ_l α_{i,l}, nondecreasing in k.
  std::vector<std::vector<double>> cumulative(static_cast<std::size_t>(count), std::vector<double>(n));
  for (Eigen::Index i = 0; i < count; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      acc += grid.measure(k) * a(i, static_cast<Eigen::Index>(k));
      cumulative[static_cast<std::size_t>(i)][k] = acc;
    }
  }

  Eigen::VectorXd deficit = Eigen::VectorXd::Zero(count);
  std::vector<int> choices(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto col = static_cast<Eigen::Index>(k);
    const double len = grid.measure(k);
    deficit += len * a.col(col);

    Eigen::Index pick = -1;
    std::size_t pick_deadline = n + 1;
    for (Eigen::Index i = 0; i < count; ++i) {
      if (!allowed(cfg, a, i, col)) continue;
      // Only bangs that are owed mass are candidates; at least one always is.
      if (deficit(i) <= 1e-9 * len) continue;
      bool keeps_bound = true;
      for (Eigen::Index j = 0; j < count && keeps_bound; ++j) {
        const double dev = deficit(j) - (j == i ? len : 0.0);
        keeps_bound = std::abs(dev) <= bound + slack;
      }
      if (!keeps_bound) continue;
      // First later cell at which the deficit of i exceeds the bound when i is postponed.
      const auto& cum = cumulative[static_cast<std::size_t>(i)];
      const double threshold = bound - deficit(i) + cum[k];
      const auto it = std::upper_bound(cum.begin() + static_cast<std::ptrdiff_t>(k) + 1, cum.end(), threshold + slack);
      const auto deadline = static_cast<std::size_t>(it - cum.begin());
      if (pick < 0 || deadline < pick_deadline || (deadline == pick_deadline && deficit(i) > deficit(pick))) {
        pick = i;
        pick_deadline = deadline;
      }
    }
    if (pick < 0) pick = sur_choice(cfg, a, deficit, col);
    deficit(pick) -= len;
    choices[k] = static_cast<int>(pick);
  }
  return {grid, static_cast<int>(count), std::move(choices)};
}

RoundingOutcome round(const RoundingGrid& grid, const RelaxedControl& alpha, const RoundingConfig& cfg) {
  if (cfg.theta_check && !(*cfg.theta_check > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "theta must be positive");
  }
  BinaryControl omega = cfg.algorithm == RoundingAlgorithm::kSur ? round_sur(grid, alpha, cfg) : round_nfr(grid, alpha, cfg);
  const double distance = pseudometric_dT(grid, alpha, omega);
  RoundingOutcome out{std::move(omega), distance, std::nullopt};
  if (cfg.theta_check) out.contract_met = distance <= *cfg.theta_check * grid.max_measure() + 1e-12;
  return out;
}

bool verify_contract(const RoundingGrid& grid, const RelaxedControl& alpha, const BinaryControl& omega, double theta) {
  if (!(omega.grid() == grid)) throw Error(ErrorCode::kDomainMismatch, "binary control is not defined on the rounding grid");
  return pseudometric_dT(grid, alpha, omega) <= theta * grid.max_measure() + 1e-12;
}

}  // namespace cia
