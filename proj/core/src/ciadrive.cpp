#include "cia/ciadrive.hpp"

#include "cia/errors.hpp"
#include "cia/io.hpp"
#include "json_support.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <optional>
#include <set>
#include <string>

namespace cia {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

double Schedule::epsilon(int n) const { return eps0 * std::pow(eps_decay, n); }
double Schedule::gamma(int n) const { return gamma0 * std::pow(gamma_decay, n); }

CiaConfig default_srp_config() {
  CiaConfig c;
  c.problem = ProblemKind::kSrp;
  c.spec = RegularizerSpec::scalar({-1.0, -0.25, 0.0, 0.35, 1.0}, {1.0, 0.125, 0.0, 0.175, 1.0});
  c.smoothing = SmoothingMode::kRamp1d;
  c.schedule = Schedule{1.0, 0.4, 0.5, 0.5, 9, true};
  c.relaxation_grid = RelaxationGridMode::kFixed;
  c.relaxation_cells = 1024;
  return c;
}

CiaConfig default_lvp_config() {
  CiaConfig c;
  c.problem = ProblemKind::kLvp;
  MatrixXd v(2, 5);
  v << 0.0, 0.05, 0.4, 0.0, 0.4,  //
      -0.1, 0.0, -0.1, 0.1, 0.1;
  VectorXd g(5);
  g << 2.0, 0.0, 1.0, 2.0, 0.1;
  c.spec = RegularizerSpec::create(std::move(v), std::move(g));
  c.smoothing = SmoothingMode::kMoreau;
  c.schedule = Schedule{1e-3, 0.3125, 0.5, 0.2, 6, true};
  c.relaxation_grid = RelaxationGridMode::kRounding;
  c.solver.max_iterations = 3000;
  return c;
}

namespace {

[[noreturn]] void config_error(const std::string& what) {
  throw Error(ErrorCode::kInvalidArgument, "config: " + what);
}

void check_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) config_error(std::string(where) + " must be an object");
  for (const auto& item : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      config_error("unknown key '" + item.key() + "' in " + std::string(where));
    }
  }
}

template <class T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

std::vector<double> read_vector(const json& value) { return value.get<std::vector<double>>(); }

}  // namespace

CiaConfig parse_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    config_error(e.what());
  }
  check_keys(doc, "config",
             {"problem", "spec", "smoothing", "eta", "srp", "lvp", "zero", "grid", "relaxation", "schedule", "rounding",
              "solver"});
  try {
    const std::string problem = doc.value("problem", std::string("srp"));
    CiaConfig c;
    if (problem == "srp") {
      c = default_srp_config();
    } else if (problem == "lvp") {
      c = default_lvp_config();
    } else if (problem == "zero") {
      c = default_srp_config();
      c.problem = ProblemKind::kZero;
    } else {
      config_error("problem must be \"srp\", \"lvp\" or \"zero\"");
    }

    if (doc.contains("spec")) c.spec = detail::spec_from_json_value(doc.at("spec"));
    if (doc.contains("smoothing")) {
      const std::string mode = doc.at("smoothing").get<std::string>();
      if (mode == "moreau") {
        c.smoothing = SmoothingMode::kMoreau;
      } else if (mode == "ramp1d") {
        c.smoothing = SmoothingMode::kRamp1d;
      } else {
        config_error("smoothing must be \"moreau\" or \"ramp1d\"");
      }
    }
    if (doc.contains("eta")) {
      const double eta = doc.at("eta").get<double>();
      c.srp.eta = eta;
      c.lvp.eta = eta;
      c.zero_eta = eta;
    }
    if (doc.contains("srp")) {
      const json& s = doc.at("srp");
      check_keys(s, "srp", {"t0", "tf", "sigma", "truncation", "quadrature_order", "observation_cells", "target"});
      read(s, "t0", c.srp.t0);
      read(s, "tf", c.srp.tf);
      read(s, "sigma", c.srp.sigma);
      read(s, "truncation", c.srp.truncation);
      read(s, "quadrature_order", c.srp.quadrature_order);
      read(s, "observation_cells", c.srp.observation_cells);
      if (s.contains("target")) {
        const json& t = s.at("target");
        check_keys(t, "srp.target", {"breakpoints", "values"});
        if (t.contains("breakpoints")) c.srp.target_breakpoints = read_vector(t.at("breakpoints"));
        if (t.contains("values")) c.srp.target_values = read_vector(t.at("values"));
      }
    }
    if (doc.contains("lvp")) {
      const json& s = doc.at("lvp");
      check_keys(s, "lvp", {"t0", "tf", "initial_state", "rk4_steps_per_cell", "divergence_limit"});
      read(s, "t0", c.lvp.t0);
      read(s, "tf", c.lvp.tf);
      read(s, "rk4_steps_per_cell", c.lvp.rk4_steps_per_cell);
      read(s, "divergence_limit", c.lvp.divergence_limit);
      if (s.contains("initial_state")) {
        const auto y0 = read_vector(s.at("initial_state"));
        if (y0.size() != 2) config_error("lvp.initial_state needs two entries");
        c.lvp.initial_state = Eigen::Vector2d(y0[0], y0[1]);
      }
    }
    if (doc.contains("zero")) {
      const json& s = doc.at("zero");
      check_keys(s, "zero", {"t0", "tf"});
      read(s, "t0", c.zero_t0);
      read(s, "tf", c.zero_tf);
    }
    if (doc.contains("grid")) {
      const json& s = doc.at("grid");
      check_keys(s, "grid", {"base_cells", "split"});
      read(s, "base_cells", c.base_cells);
      read(s, "split", c.split);
    }
    if (doc.contains("relaxation")) {
      const json& s = doc.at("relaxation");
      check_keys(s, "relaxation", {"grid", "cells"});
      if (s.contains("grid")) {
        const std::string mode = s.at("grid").get<std::string>();
        if (mode == "fixed") {
          c.relaxation_grid = RelaxationGridMode::kFixed;
        } else if (mode == "rounding") {
          c.relaxation_grid = RelaxationGridMode::kRounding;
        } else {
          config_error("relaxation.grid must be \"fixed\" or \"rounding\"");
        }
      }
      read(s, "cells", c.relaxation_cells);
    }
    if (doc.contains("schedule")) {
      const json& s = doc.at("schedule");
      check_keys(s, "schedule",
                 {"eps0", "gamma0", "eps_decay", "gamma_decay", "iterations", "refine_every_iteration"});
      read(s, "eps0", c.schedule.eps0);
      read(s, "gamma0", c.schedule.gamma0);
      read(s, "eps_decay", c.schedule.eps_decay);
      read(s, "gamma_decay", c.schedule.gamma_decay);
      read(s, "iterations", c.schedule.iterations);
      read(s, "refine_every_iteration", c.schedule.refine_every_iteration);
    }
    if (doc.contains("rounding")) {
      const json& s = doc.at("rounding");
      check_keys(s, "rounding", {"algorithm", "zero_mass", "theta"});
      if (s.contains("algorithm")) c.rounding.algorithm = parse_rounding_algorithm(s.at("algorithm").get<std::string>());
      read(s, "zero_mass", c.rounding.zero_mass_preserving);
      if (s.contains("theta")) c.rounding.theta_check = s.at("theta").get<double>();
    }
    if (doc.contains("solver")) {
      const json& s = doc.at("solver");
      check_keys(s, "solver", {"max_iterations", "armijo_c1", "backtrack", "initial_step", "max_backtracks"});
      read(s, "max_iterations", c.solver.max_iterations);
      read(s, "armijo_c1", c.solver.armijo_c1);
      read(s, "backtrack", c.solver.backtrack);
      read(s, "initial_step", c.solver.initial_step);
      read(s, "max_backtracks", c.solver.max_backtracks);
    }

    const Schedule& sc = c.schedule;
    if (!(sc.eps0 > 0.0) || !(sc.gamma0 > 0.0)) config_error("schedule eps0 and gamma0 must be positive");
    if (!(sc.eps_decay > 0.0 && sc.eps_decay < 1.0) || !(sc.gamma_decay > 0.0 && sc.gamma_decay < 1.0)) {
      config_error("schedule decay factors must lie in (0, 1)");
    }
    if (sc.iterations < 0) config_error("schedule.iterations must be nonnegative");
    if (c.base_cells < 1 || c.split < 2) config_error("grid needs base_cells >= 1 and split >= 2");
    if (c.relaxation_cells < 1) config_error("relaxation.cells must be positive");
    if (c.solver.max_iterations < 1) config_error("solver.max_iterations must be positive");
    if (c.problem == ProblemKind::kSrp && c.spec.dim() != 1) config_error("srp needs scalar bangs");
    if (c.problem == ProblemKind::kLvp && c.spec.dim() != 2) config_error("lvp needs two-dimensional bangs");
    return c;
  } catch (const json::exception& e) {
    config_error(e.what());
  }
}

std::unique_ptr<ObjectiveOracle> make_oracle(const CiaConfig& config) {
  switch (config.problem) {
    case ProblemKind::kSrp:
      return std::make_unique<SrpOracle>(config.srp);
    case ProblemKind::kLvp:
      return std::make_unique<LvpOracle>(config.lvp);
    case ProblemKind::kZero:
      return std::make_unique<ZeroOracle>(config.spec.dim(), config.zero_t0, config.zero_tf, config.zero_eta);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown problem kind");
}

SmoothedRegularizer make_smoothed(const RegularizerSpec& spec, double gamma, SmoothingMode mode) {
  if (mode == SmoothingMode::kRamp1d && spec.dim() == 1) {
    const ScalarEnvelope env = ScalarEnvelope::from_spec(spec);
    const auto& b = env.bangs();
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < b.size(); ++i) gap = std::min(gap, b[i] - b[i - 1]);
    gamma = std::min(gamma, 0.99 * gap);
  }
  return SmoothedRegularizer::create(spec, gamma, mode);
}

double relative_gap(double rounded, double smoothed) {
  if (rounded == smoothed) return 0.0;
  return (rounded - smoothed) / std::max(std::abs(smoothed), kGapFloor);
}

namespace {

RelaxedControl select_on_grid(const RegularizerSpec& spec, const PiecewiseConstantControl& vbar) {
  const Index count = spec.count();
  MatrixXd alpha(count, static_cast<Index>(vbar.grid().size()));
  for (std::size_t k = 0; k < vbar.grid().size(); ++k) {
    VectorXd a = select_coefficients(spec, vbar.value(k)).cwiseMax(0.0);
    a /= a.sum();
    alpha.col(static_cast<Index>(k)) = a;
  }
  return {vbar.grid(), std::move(alpha)};
}

}  // namespace

CiaRun run_cia(const CiaConfig& config, const std::function<void(const RunRecord&)>& on_record) {
  const auto oracle = make_oracle(config);
  if (oracle->control_dim() != config.spec.dim()) {
    throw Error(ErrorCode::kDomainMismatch, "spec dimension does not match the problem's control dimension");
  }
  const Dissection dissection(RoundingGrid::uniform(oracle->t0(), oracle->tf(), config.base_cells), config.split);
  const Schedule& sc = config.schedule;

  CiaRun run;
  int c = 0;
  std::optional<PiecewiseConstantControl> previous;
  for (int n = 0; n < sc.iterations; ++n) {
    const double eps = sc.epsilon(n);
    const double gamma = sc.gamma(n);
    if (sc.refine_every_iteration) c = std::max(c, n);

    const SmoothedRegularizer sm = make_smoothed(config.spec, gamma, config.smoothing);
    const RoundingGrid relax_grid = config.relaxation_grid == RelaxationGridMode::kFixed
                                        ? RoundingGrid::uniform(oracle->t0(), oracle->tf(), config.relaxation_cells)
                                        : refine(dissection, c);
    SolveSettings settings = config.solver;
    settings.epsilon = eps;
    RelaxationResult relaxed = solve_relaxation(*oracle, sm, relax_grid, settings, previous ? &*previous : nullptr);

    // Refine the rounding grid until the averaged control is ε-close.
    RoundingGrid grid = refine(dissection, c);
    PiecewiseConstantControl vbar = average_onto(relaxed.v, grid);
    while (!(l2_distance(vbar, relaxed.v) < eps)) {
      ++c;
      grid = refine(dissection, c);
      vbar = average_onto(relaxed.v, grid);
    }

    RelaxedControl alpha = select_on_grid(config.spec, vbar);
    RoundingOutcome rounded = round(grid, alpha, config.rounding);
    PiecewiseConstantControl vhat = bang_combination(config.spec, rounded.omega);

    RunRecord rec;
    rec.n = n + 1;
    rec.cells = grid.size();
    rec.delta = grid.max_measure();
    rec.epsilon = eps;
    rec.gamma = gamma;
    rec.smoothed_objective = relaxed.objective;
    rec.rounded_objective = exact_objective(*oracle, config.spec, vhat);
    rec.relative_gap = relative_gap(rec.rounded_objective, rec.smoothed_objective);
    rec.l2_relaxed_rounded = l2_distance(relaxed.v, vhat);
    rec.rounding_distance = rounded.distance;
    rec.certificate = relaxed.certificate.status;
    rec.grid_index = c;
    if (on_record) on_record(rec);
    run.records.push_back(rec);

    previous = relaxed.v;
    run.artifacts.push_back(IterationArtifacts{std::move(relaxed.v), std::move(vbar), std::move(alpha),
                                               std::move(rounded.omega), std::move(vhat)});
  }
  return run;
}

std::string report_csv(const std::vector<RunRecord>& records) {
  std::string out =
      "n,N,Delta,epsilon,gamma,J_smoothed,J_rounded,relative_gap,l2_relaxed_rounded,dT,certificate\n";
  for (const RunRecord& r : records) {
    out += std::to_string(r.n);
    out += ',' + std::to_string(r.cells);
    for (double x : {r.delta, r.epsilon, r.gamma, r.smoothed_objective, r.rounded_objective, r.relative_gap,
                     r.l2_relaxed_rounded, r.rounding_distance}) {
      out += ',' + format_double(x);
    }
    out += ',';
    out += to_string(r.certificate);
    out += '\n';
  }
  return out;
}

void emit_report(const CiaRun& run, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + out_dir.string() + ": " + ec.message());
  write_file(out_dir / "report.csv", report_csv(run.records));
  for (std::size_t i = 0; i < run.artifacts.size(); ++i) {
    const std::string n = std::to_string(i + 1);
    write_file(out_dir / ("relaxed_" + n + ".csv"), control_to_csv(run.artifacts[i].relaxed));
    write_file(out_dir / ("binary_" + n + ".csv"), control_to_csv(run.artifacts[i].omega));
  }
}

StrictConvexityReport strict_convexity_demo(double weight_minus, double weight_plus, int levels, double t0,
                                            double tf) {
  const RegularizerSpec spec = RegularizerSpec::scalar({-1.0, 1.0}, {weight_minus, weight_plus});
  StrictConvexityReport report;
  report.domain_measure = tf - t0;
  for (int l = 0; l < levels; ++l) {
    const RoundingGrid grid = RoundingGrid::uniform(t0, tf, std::int64_t{1} << l);
    const auto cells = static_cast<Index>(grid.size());
    const RelaxedControl alpha(grid, MatrixXd::Constant(2, cells, 0.5));
    const BinaryControl omega = round_sur(grid, alpha);
    const PiecewiseConstantControl vbar = PiecewiseConstantControl::constant(grid, VectorXd::Zero(1));
    const PiecewiseConstantControl vhat = bang_combination(spec, omega);

    StrictConvexityLevel lv;
    lv.cells = grid.size();
    double quad = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double u = vhat.value(k)(0);
      quad += grid.measure(k) * u * u;
    }
    lv.quadratic_rounded = quad;
    lv.quadratic_gap = quad - 0.0;
    lv.envelope_relaxed = integrate_R(spec, vbar);
    lv.envelope_rounded = integrate_R(spec, vhat);
    lv.envelope_identity = spec.weights().dot(omega.integral());
    lv.identity_residual = std::abs(lv.envelope_rounded - lv.envelope_identity);
    lv.rounding_bound = spec.weights().cwiseAbs().sum() * static_cast<double>(spec.count() - 1) * grid.max_measure();
    report.levels.push_back(lv);
  }
  return report;
}

}  // namespace cia
