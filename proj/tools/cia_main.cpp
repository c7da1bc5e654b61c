#include <CLI11.hpp>
#include <json.hpp>

#include "cia/ciadrive.hpp"
#include "cia/errors.hpp"
#include "cia/io.hpp"
#include "cia/multibang.hpp"
#include "cia/rounding.hpp"

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;

int exit_code_for(cia::ErrorCode code) {
  switch (code) {
    case cia::ErrorCode::kInfeasible:
    case cia::ErrorCode::kIterationLimit:
    case cia::ErrorCode::kDiverged:
    case cia::ErrorCode::kTooFine:
      return kExitSolver;
    default:
      return kExitValidation;
  }
}

std::vector<double> parse_point(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(field, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    while (used < field.size() && field[used] == ' ') ++used;
    if (used == 0 || used != field.size()) {
      throw cia::Error(cia::ErrorCode::kInvalidArgument, "malformed coordinate '" + field + "'");
    }
    out.push_back(x);
  }
  if (out.empty()) throw cia::Error(cia::ErrorCode::kInvalidArgument, "empty point");
  return out;
}

nlohmann::json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

int cmd_run(const std::string& config_path, const std::string& out_dir) {
  const cia::CiaConfig config = cia::parse_config(cia::read_file(config_path));
  std::printf("%3s %8s %12s %12s %12s %14s %14s %12s %12s\n", "n", "N", "Delta", "eps", "gamma", "J_gamma(v)",
              "J(v_hat)", "rel_gap", "L2");
  const cia::CiaRun run = cia::run_cia(config, [](const cia::RunRecord& r) {
    std::printf("%3d %8zu %12.4e %12.4e %12.4e %14.6e %14.6e %12.4e %12.4e\n", r.n, r.cells, r.delta, r.epsilon,
                r.gamma, r.smoothed_objective, r.rounded_objective, r.relative_gap, r.l2_relaxed_rounded);
    std::fflush(stdout);
    if (r.certificate != cia::CertificateStatus::kMet) {
      std::fprintf(stderr, "warning: iteration %d relaxation certificate not met\n", r.n);
    }
  });
  cia::emit_report(run, out_dir);
  return 0;
}

int cmd_eval_reg(const std::string& spec_path, const std::string& point, std::optional<double> gamma,
                 const std::string& mode) {
  const cia::RegularizerSpec spec = cia::spec_from_json(cia::read_file(spec_path));
  const std::vector<double> coords = parse_point(point);
  if (static_cast<Eigen::Index>(coords.size()) != spec.dim()) {
    throw cia::Error(cia::ErrorCode::kDomainMismatch, "point dimension does not match the bangs");
  }
  const Eigen::VectorXd u = Eigen::Map<const Eigen::VectorXd>(coords.data(), spec.dim());
  const cia::EnvelopeValue ev = cia::eval_g(spec, u);

  nlohmann::json out;
  out["g"] = ev.value;
  out["alpha"] = to_json(cia::select_coefficients(spec, u));
  if (gamma) {
    const auto sm = cia::SmoothedRegularizer::create(
        spec, *gamma, mode == "ramp1d" ? cia::SmoothingMode::kRamp1d : cia::SmoothingMode::kMoreau);
    const cia::SmoothValue sv = cia::smoothed_eval(sm, u);
    out["gamma"] = *gamma;
    out["mode"] = mode;
    out["smoothed"] = sv.value;
    out["gradient"] = to_json(sv.gradient);
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_round(const std::string& grid_path, const std::string& alpha_path, const std::string& algo, bool zero_mass,
              const std::string& out_path) {
  const cia::RoundingGrid grid = cia::grid_from_csv(cia::read_file(grid_path));
  const cia::PiecewiseConstantControl coeffs = cia::control_from_csv(cia::read_file(alpha_path));
  const cia::RelaxedControl alpha(coeffs.grid(), coeffs.values());
  cia::RoundingConfig cfg;
  cfg.algorithm = cia::parse_rounding_algorithm(algo);
  cfg.zero_mass_preserving = zero_mass;
  const cia::RoundingOutcome res = cia::round(grid, alpha, cfg);
  const std::string csv = cia::control_to_csv(res.omega);
  if (out_path.empty()) {
    std::cout << csv;
  } else {
    cia::write_file(out_path, csv);
  }
  std::fprintf(stderr, "d_T = %s\n", cia::format_double(res.distance).c_str());
  return 0;
}

int cmd_demo(int levels, double weight_minus, double weight_plus) {
  const cia::StrictConvexityReport rep = cia::strict_convexity_demo(weight_minus, weight_plus, levels);
  std::printf("quadratic integrand u^2 vs multibang envelope, bangs {-1, 1}, weights (%g, %g)\n", weight_minus,
              weight_plus);
  std::printf("%8s %14s %14s %14s %14s %12s\n", "N", "quad_gap", "R(v_bar)", "R(v_hat)", "sum g*int w",
              "residual");
  for (const auto& lv : rep.levels) {
    std::printf("%8zu %14.6e %14.6e %14.6e %14.6e %12.3e\n", lv.cells, lv.quadratic_gap, lv.envelope_relaxed,
                lv.envelope_rounded, lv.envelope_identity, lv.identity_residual);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relaxed multibang regularization and combinatorial integral approximation"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  auto* run = app.add_subcommand("run", "Run the outer approximation loop from a JSON config");
  run->add_option("--config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory for report.csv and control CSVs")->required();

  std::string spec_path;
  std::string point;
  std::optional<double> gamma;
  std::string mode = "moreau";
  auto* eval = app.add_subcommand("eval-reg", "Evaluate g, the selector, and optionally a smoothing at a point");
  eval->add_option("--spec", spec_path, "Regularizer spec (JSON)")->required()->check(CLI::ExistingFile);
  eval->add_option("--point", point, "Comma-separated coordinates")->required();
  eval->add_option("--gamma", gamma, "Smoothing parameter")->check(CLI::PositiveNumber);
  eval->add_option("--mode", mode, "Smoothing mode")->check(CLI::IsMember({"moreau", "ramp1d"}));

  std::string grid_path;
  std::string alpha_path;
  std::string algo = "sur";
  bool zero_mass = false;
  std::string round_out;
  auto* rnd = app.add_subcommand("round", "Round a relaxed control CSV to a binary control CSV");
  rnd->add_option("--grid", grid_path, "Rounding grid (CSV with cell_start, cell_end)")
      ->required()
      ->check(CLI::ExistingFile);
  rnd->add_option("--alpha", alpha_path, "Relaxed coefficients (CSV)")->required()->check(CLI::ExistingFile);
  rnd->add_option("--algo", algo, "Rounding algorithm")->check(CLI::IsMember({"sur", "nfr"}));
  rnd->add_flag("--zero-mass", zero_mass, "Never activate a bang with zero coefficient on a cell");
  rnd->add_option("--out", round_out, "Output file (default: stdout)");

  int levels = 8;
  double weight_minus = 1.0;
  double weight_plus = 1.0;
  auto* demo = app.add_subcommand("demo", "Built-in demonstrations");
  auto* strict = demo->add_subcommand("strict-convexity", "Rounding gap for u^2 versus the multibang envelope");
  strict->add_option("--levels", levels, "Number of dyadic refinement levels")->check(CLI::Range(1, 24));
  strict->add_option("--weight-minus", weight_minus, "g(-1)")->check(CLI::NonNegativeNumber);
  strict->add_option("--weight-plus", weight_plus, "g(+1)")->check(CLI::NonNegativeNumber);
  demo->require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }

  try {
    if (*run) return cmd_run(config_path, out_dir);
    if (*eval) return cmd_eval_reg(spec_path, point, gamma, mode);
    if (*rnd) return cmd_round(grid_path, alpha_path, algo, zero_mass, round_out);
    if (*strict) return cmd_demo(levels, weight_minus, weight_plus);
  } catch (const cia::Error& e) {
    std::cerr << "error [" << cia::to_string(e.code()) << "]: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSolver;
  }
  return 0;
}
