#pragma once

#include "cia/grids.hpp"

#include <optional>
#include <string_view>

namespace cia {

enum class RoundingAlgorithm { kSur, kNfr };

std::string_view to_string(RoundingAlgorithm algorithm);
RoundingAlgorithm parse_rounding_algorithm(std::string_view name);

struct RoundingConfig {
  RoundingAlgorithm algorithm = RoundingAlgorithm::kSur;
  /// Never select a bang whose coefficient vanishes on the cell.
  bool zero_mass_preserving = false;
  /// When set, round() checks d_T(α, ω) ≤ θ Δ_T afterwards.
  std::optional<double> theta_check;
};

/// Sum-up rounding: per cell, pick the bang with the largest accumulated
/// deficit Σ_{l≤k} λ_l α_{i,l} − Σ_{l<k} λ_l ω_{i,l} (lowest index on ties).
BinaryControl round_sur(const RoundingGrid& grid, const RelaxedControl& alpha, const RoundingConfig& cfg = {});

/// Next-forced rounding: among bangs keeping every prefix deviation within
/// Δ_T, pick the one whose deficit would exceed Δ_T soonest if postponed.
/// Falls back to the SUR choice when no bang keeps the bound.
BinaryControl round_nfr(const RoundingGrid& grid, const RelaxedControl& alpha, const RoundingConfig& cfg = {});

struct RoundingOutcome {
  BinaryControl omega;
  double distance = 0.0;  // d_T(α, ω)
  std::optional<bool> contract_met;
};

/// Runs the configured algorithm and, if requested, the θ check.
RoundingOutcome round(const RoundingGrid& grid, const RelaxedControl& alpha, const RoundingConfig& cfg);

/// d_T(α, ω) ≤ θ Δ_T + 1e−12
bool verify_contract(const RoundingGrid& grid, const RelaxedControl& alpha, const BinaryControl& omega, double theta);

}  // namespace cia
