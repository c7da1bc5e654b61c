#pragma once

#include "cia/grids.hpp"
#include "cia/multibang.hpp"
#include "cia/relaxopt.hpp"
#include "cia/rounding.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace cia {

/// Null sequences ε^n = ε⁰ ρ_ε^n and γ^n = γ⁰ ρ_γ^n, n = 0, 1, ….
struct Schedule {
  double eps0 = 1.0;
  double gamma0 = 0.4;
  double eps_decay = 0.5;
  double gamma_decay = 0.5;
  int iterations = 9;
  /// Enforce c^n ≥ n so that the rounding grid is refined every iteration.
  bool refine_every_iteration = true;

  double epsilon(int n) const;
  double gamma(int n) const;
};

enum class ProblemKind { kZero, kSrp, kLvp };

/// Where the relaxation is discretized: a fixed fine grid, or the current rounding grid.
enum class RelaxationGridMode { kFixed, kRounding };

struct CiaConfig {
  ProblemKind problem = ProblemKind::kSrp;
  RegularizerSpec spec = RegularizerSpec::scalar({-1.0, -0.25, 0.0, 0.35, 1.0}, {1.0, 0.125, 0.0, 0.175, 1.0});
  SmoothingMode smoothing = SmoothingMode::kRamp1d;
  SrpSettings srp;
  LvpSettings lvp;
  /// Horizon and weight for the F ≡ 0 problem.
  double zero_t0 = 0.0;
  double zero_tf = 1.0;
  double zero_eta = 1.0;
  int base_cells = 16;
  int split = 2;
  Schedule schedule;
  RelaxationGridMode relaxation_grid = RelaxationGridMode::kFixed;
  int relaxation_cells = 1024;
  RoundingConfig rounding;
  SolveSettings solver;
};

/// Signal reconstruction defaults (5 scalar bangs, η = 0.01).
CiaConfig default_srp_config();
/// Two-control Lotka–Volterra defaults (η = 0.005, γ⁰ = 0.3125, ρ_γ = 1/5).
CiaConfig default_lvp_config();

/// Parses a JSON run configuration. Keys not given fall back to the defaults
/// of the selected problem.
CiaConfig parse_config(std::string_view json_text);

std::unique_ptr<ObjectiveOracle> make_oracle(const CiaConfig& config);

/// Smoothed regularizer for iteration parameter γ. Ramp smoothing caps γ just
/// below the smallest bang gap.
SmoothedRegularizer make_smoothed(const RegularizerSpec& spec, double gamma, SmoothingMode mode);

/// One row of the outer-loop report.
struct RunRecord {
  int n = 0;  // 1-based iteration
  std::size_t cells = 0;
  double delta = 0.0;
  double epsilon = 0.0;
  double gamma = 0.0;
  double smoothed_objective = 0.0;  // J_γ(v^n)
  double rounded_objective = 0.0;   // J(v̂^n)
  double relative_gap = 0.0;
  double l2_relaxed_rounded = 0.0;  // ‖v^n − v̂^n‖_{L²}
  double rounding_distance = 0.0;   // d_T(α^n, ω^n)
  CertificateStatus certificate = CertificateStatus::kNotMet;
  int grid_index = 0;  // c^n
};

struct IterationArtifacts {
  PiecewiseConstantControl relaxed;   // v^n
  PiecewiseConstantControl averaged;  // v̄^n
  RelaxedControl alpha;
  BinaryControl omega;
  PiecewiseConstantControl rounded;   // v̂^n
};

struct CiaRun {
  std::vector<RunRecord> records;
  std::vector<IterationArtifacts> artifacts;
};

/// Denominators below this are treated as this value, so a relaxed optimum
/// with J_γ ≈ 0 does not blow the gap up.
inline constexpr double kGapFloor = 1e-12;

/// (J(v̂) − J_γ(v)) / max(|J_γ(v)|, kGapFloor); zero when both coincide.
double relative_gap(double rounded, double smoothed);

/// Outer approximation loop: relax, average onto the rounding grid until the
/// L² test passes, select coefficients, round, and evaluate.
CiaRun run_cia(const CiaConfig& config, const std::function<void(const RunRecord&)>& on_record = {});

std::string report_csv(const std::vector<RunRecord>& records);

/// Writes report.csv plus relaxed_<n>.csv and binary_<n>.csv per iteration.
void emit_report(const CiaRun& run, const std::filesystem::path& out_dir);

struct StrictConvexityLevel {
  std::size_t cells = 0;
  double quadratic_rounded = 0.0;  // ∫ v̂² with v̄ ≡ 0, so R(v̄) = 0
  double quadratic_gap = 0.0;
  double envelope_relaxed = 0.0;   // R(v̄)
  double envelope_rounded = 0.0;   // R(v̂)
  double envelope_identity = 0.0;  // Σ g_i ∫ ω_i
  double identity_residual = 0.0;  // |R(v̂) − Σ g_i ∫ ω_i|
  double rounding_bound = 0.0;        // (Σ|g_i|)(M−1)Δ
};

struct StrictConvexityReport {
  double domain_measure = 0.0;
  std::vector<StrictConvexityLevel> levels;
};

/// Rounds α ≡ (½, ½) over bangs {−1, 1} on successively refined grids and
/// compares the strictly convex integrand u² with the multibang envelope.
StrictConvexityReport strict_convexity_demo(double weight_minus = 1.0, double weight_plus = 1.0, int levels = 8,
                                            double t0 = 0.0, double tf = 1.0);

}  // namespace cia
