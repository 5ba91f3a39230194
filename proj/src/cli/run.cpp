#include "mfe/cli/run.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <random>

#include <CLI11.hpp>

#include "mfe/alpha_mt.hpp"
#include "mfe/cli/config.hpp"
#include "mfe/cli/output.hpp"
#include "mfe/envelope.hpp"
#include "mfe/mean_field.hpp"
#include "mfe/probes.hpp"

namespace mfe::cli {

namespace {

namespace fs = std::filesystem;

struct Context {
  RunConfig config;
  BackgroundForm omega;
  Measure mu0;
  std::chrono::steady_clock::time_point start;
};

Json config_echo(const RunConfig& c) {
  Json j;
  j["source"] = c.source;
  j["seed"] = c.seed;
  j["grid"] = {{"n_side", c.n_side}};
  auto density = [](const DensitySpec& d) {
    Json o;
    o["kind"] = d.kind;
    if (d.kind == "cosine") o["amplitude"] = d.amplitude;
    if (d.kind == "file") o["path"] = d.path.lexically_normal().string();
    return o;
  };
  j["form"] = density(c.form);
  Json m = density(c.measure);
  if (!c.poles.empty()) {
    Json poles = Json::array();
    for (const auto& p : c.poles) poles.push_back({p.center.x, p.center.y, p.exponent});
    m["poles"] = poles;
  }
  j["measure"] = m;
  Json s;
  s["beta"] = c.beta;
  s["tol_residual"] = c.tol_residual;
  s["tol_gap"] = c.tol_gap;
  s["max_iter"] = c.max_iter;
  s["damping"] = c.damping ? Json(*c.damping) : Json(nullptr);
  s["method"] = c.method;
  s["override_coercivity"] = c.override_coercivity;
  s["alpha_hint"] = c.alpha_hint ? Json(*c.alpha_hint) : Json(nullptr);
  j["solver"] = s;
  j["sweep"] = {{"betas", c.betas}};
  j["output"] = {{"heatmaps", c.heatmaps}, {"timing", c.timing}};
  return j;
}

Json header(const Context& ctx, const std::string& subcommand) {
  Json j;
  j["subcommand"] = subcommand;
  j["config"] = config_echo(ctx.config);
  return j;
}

void stamp_time(const Context& ctx, Json& j) {
  if (!ctx.config.timing) return;
  const auto dt = std::chrono::steady_clock::now() - ctx.start;
  j["wall_time_ms"] = std::chrono::duration<double, std::milli>(dt).count();
}

SolverParams solver_params(const RunConfig& c) {
  SolverParams p;
  p.beta = c.beta;
  p.tol_residual = c.tol_residual;
  p.tol_gap = c.tol_gap;
  p.max_iter = c.max_iter;
  p.damping = c.damping;
  p.override_coercivity = c.override_coercivity;
  p.alpha_hint = c.alpha_hint;
  if (c.method == "fixed_point") p.method = SolverMethod::FixedPoint;
  if (c.method == "newton") p.method = SolverMethod::Newton;
  return p;
}

bool failed(SolveVerdict v) {
  return v == SolveVerdict::Diverged || v == SolveVerdict::CoercivityFailed;
}

Json functionals_json(const Potential& u, const Measure& mu0, double beta,
                      const BackgroundForm& omega) {
  Json j;
  try {
    const FunctionalReport f = evaluate_functionals(u, mu0, beta, omega);
    j["E"] = number(f.E);
    j["I"] = number(f.I);
    j["J"] = number(f.J);
    j["D"] = number(f.D);
    j["F"] = number(f.F);
    j["G"] = number(f.G);
    j["K"] = number(f.K);
  } catch (const NotPsh&) {
    for (const char* k : {"E", "I", "J", "D", "F", "G", "K"}) j[k] = nullptr;
  }
  return j;
}

Json coercivity_json(const CoercivityReport& r) {
  Json j;
  j["pass"] = r.pass;
  j["gamma"] = r.gamma;
  j["alpha_hat"] = r.alpha_hat;
  j["threshold"] = r.threshold;
  j["max_value"] = number(r.max_value);
  j["witness"] = r.witness;
  j["trend_slope"] = number(r.trend_slope);
  j["unbounded_trend"] = r.unbounded_trend;
  Json trend = Json::array();
  for (const auto& t : r.trend) trend.push_back({{"eps", t.eps}, {"value", number(t.value)}});
  j["trend"] = trend;
  return j;
}

void write_history(const fs::path& path, const std::vector<HistoryRow>& history) {
  CsvWriter csv(path, {"iter", "residual", "F", "G", "gap"});
  for (const auto& h : history) {
    csv.row(std::vector<std::string>{std::to_string(h.iter), format_double(h.residual),
                                     format_double(h.F), format_double(h.G),
                                     format_double(h.gap)});
  }
  csv.close();
}

Json solve_summary(const SolveResult& r, const Context& ctx) {
  Json j;
  j["gauge"] = "zero_mean";
  j["verdict"] = to_string(r.verdict);
  j["method"] = r.method;
  j["beta"] = r.beta;
  j["iterations"] = r.iterations;
  j["residual_linf"] = number(r.residual_linf);
  j["gap"] = number(r.gap);
  j.update(functionals_json(r.u_star, ctx.mu0, r.beta, ctx.omega));
  if (r.coercivity) {
    j["alpha_hat"] = r.coercivity->alpha_hat;
    j["coercivity"] = coercivity_json(*r.coercivity);
  }
  return j;
}

int cmd_solve(Context& ctx) {
  const RunConfig& c = ctx.config;
  const SolveResult r = solve(c.beta, ctx.mu0, ctx.omega, solver_params(c));
  Json j = header(ctx, "solve");
  j.update(solve_summary(r, ctx));
  write_history(c.out_dir / "history.csv", r.history);
  if (c.heatmaps) write_pgm(c.out_dir / "u.pgm", r.u_star.u);
  stamp_time(ctx, j);
  write_json(c.out_dir / "solution.json", j);
  std::cout << "solve: " << to_string(r.verdict) << " after " << r.iterations
            << " iterations, residual " << format_double(r.residual_linf) << ", gap "
            << format_double(r.gap) << "\n";
  return failed(r.verdict) ? kSolverFailure : kOk;
}

int cmd_envelope(Context& ctx) {
  const RunConfig& c = ctx.config;
  const EnvelopeResult e = envelope_zero(ctx.omega);
  const ScalarField zero(ctx.omega.grid());
  std::size_t contact = 0;
  for (bool b : e.contact_set) contact += b ? 1 : 0;
  Json j = header(ctx, "envelope");
  j["obstacle"] = "zero";
  j["lcp_residual"] = e.lcp_residual;
  j["orthogonality_residual"] = orthogonality_residual(zero, ctx.omega);
  j["iterations"] = e.iterations;
  j["contact_fraction"] = static_cast<double>(contact) / e.contact_set.size();
  j["min"] = e.Pu.u.min();
  j["max"] = e.Pu.u.max();
  j["slack"] = e.Pu.slack;
  if (c.heatmaps) write_pgm(c.out_dir / "envelope.pgm", e.Pu.u);
  stamp_time(ctx, j);
  write_json(c.out_dir / "envelope.json", j);
  std::cout << "envelope: " << e.iterations << " sweeps, complementarity residual "
            << format_double(e.lcp_residual) << "\n";
  return kOk;
}

int cmd_duality(Context& ctx) {
  const RunConfig& c = ctx.config;
  const SolveResult r = solve(c.beta, ctx.mu0, ctx.omega, solver_params(c));
  Json j = header(ctx, "duality");
  j.update(solve_summary(r, ctx));
  write_history(c.out_dir / "history.csv", r.history);
  if (r.verdict == SolveVerdict::Converged && c.beta != 0.0) {
    std::mt19937_64 rng(c.seed);
    const int probes = 50;
    int violations = 0;
    double worst = -INFINITY;
    const double tol = 1e-10;
    if (c.beta < 0) {
      const double g_star = ding_G(r.u_star, ctx.mu0, c.beta, ctx.omega);
      for (int t = 0; t < probes; ++t) {
        const Potential u = random_admissible(ctx.omega, rng);
        const double gu = ding_G(u, ctx.mu0, c.beta, ctx.omega);
        const double fu = free_energy_F(ma_measure(u, ctx.omega), ctx.mu0, c.beta, ctx.omega);
        worst = std::max({worst, fu - gu, gu - g_star});
        if (fu > gu + tol || gu > g_star + tol) ++violations;
      }
      j["sandwich"] = {{"probes", probes}, {"violations", violations}, {"worst_excess", number(worst)}};
    } else {
      const double f_star = free_energy_F(r.mu_star, ctx.mu0, c.beta, ctx.omega);
      for (int t = 0; t < probes; ++t) {
        const Measure mu = random_measure(ctx.omega.grid(), rng);
        const double f = free_energy_F(mu, ctx.mu0, c.beta, ctx.omega);
        worst = std::max(worst, f_star - f);
        if (f_star > f + tol) ++violations;
      }
      j["minimality"] = {{"probes", probes}, {"violations", violations}, {"worst_excess", number(worst)}};
    }
  }
  stamp_time(ctx, j);
  write_json(c.out_dir / "duality.json", j);
  std::cout << "duality: " << to_string(r.verdict) << ", gap " << format_double(r.gap) << "\n";
  return failed(r.verdict) ? kSolverFailure : kOk;
}

int cmd_alpha(Context& ctx) {
  const RunConfig& c = ctx.config;
  const AlphaReport a = alpha_estimate(ctx.mu0, ctx.omega);
  const FrostmanReport fr = frostman_profile(ctx.mu0);
  Json j = header(ctx, "alpha");
  j["alpha_hat"] = a.alpha_hat;
  j["lower"] = a.lower;
  j["upper"] = a.upper;
  j["inconclusive"] = a.inconclusive;
  j["probe_family"] = a.probe_family;
  j["grid_levels"] = a.grid_levels;
  j["frostman_d"] = fr.d_hat;
  j["frostman_alpha_lower_bound"] = fr.d_hat / 2;
  j["frostman_worst_center"] = {fr.worst_center.x, fr.worst_center.y};
  Json samples = Json::array();
  CsvWriter csv(c.out_dir / "alpha_trace.csv", {"t", "level", "partial_integral", "verdict"});
  for (const auto& s : a.t_samples) {
    samples.push_back({{"t", s.t}, {"verdict", to_string(s.verdict)}, {"probe", s.probe}});
    for (std::size_t l = 0; l < s.partial_sums.size(); ++l) {
      csv.row(std::vector<std::string>{format_double(s.t), std::to_string(l + 1),
                                       format_double(s.partial_sums[l]), to_string(s.verdict)});
    }
  }
  csv.close();
  j["t_samples"] = samples;
  stamp_time(ctx, j);
  write_json(c.out_dir / "alpha.json", j);
  std::cout << "alpha: " << format_double(a.alpha_hat) << " in [" << format_double(a.lower)
            << ", " << format_double(a.upper) << "]\n";
  return kOk;
}

int cmd_mt(Context& ctx) {
  const RunConfig& c = ctx.config;
  MTOptions opt;
  opt.coercivity.alpha_hint = c.alpha_hint;
  opt.coercivity.seed = c.seed;
  const MTReport m = mt_constant_fit(ctx.mu0, ctx.omega, opt);
  Json j = header(ctx, "mt");
  j["a_fit"] = m.a_fit;
  j["C_fit"] = number(m.C_fit);
  j["witness"] = m.witness;
  j["gamma_max"] = m.gamma_max;
  j["alpha_hat"] = m.alpha_hat;
  j["frostman_d"] = m.frostman_d;
  j["frostman_coefficient"] = m.frostman_coefficient;
  Json sharp = Json::array();
  for (double a : {0.8 * m.a_fit, m.a_fit}) {
    const SharpnessReport s = mt_sharpness(a, ctx.mu0, ctx.omega);
    sharp.push_back({{"a", a}, {"violated", s.violated}, {"slope", number(s.slope)},
                     {"witness", s.witness}});
  }
  j["sharpness"] = sharp;
  stamp_time(ctx, j);
  write_json(c.out_dir / "mt.json", j);
  std::cout << "mt: a_fit " << format_double(m.a_fit) << ", C_fit " << format_double(m.C_fit)
            << "\n";
  return kOk;
}

int cmd_sweep(Context& ctx) {
  const RunConfig& c = ctx.config;
  SolverParams p = solver_params(c);
  p.method = SolverMethod::Auto;
  const SweepResult s = beta_infinity_sweep(c.betas, ctx.mu0, ctx.omega, p);
  CsvWriter csv(c.out_dir / "sweep.csv", {"beta", "l1_dist", "linf_dist", "sup_u"});
  Json rows = Json::array();
  bool any_failed = false;
  for (const auto& r : s.rows) {
    csv.row(std::vector<double>{r.beta, r.l1_dist, r.linf_dist, r.sup_u});
    rows.push_back({{"beta", r.beta},
                    {"l1_dist", number(r.l1_dist)},
                    {"linf_dist", number(r.linf_dist)},
                    {"sup_u", number(r.sup_u)},
                    {"normalization_error", number(r.normalization_error)},
                    {"verdict", to_string(r.verdict)},
                    {"iterations", r.iterations}});
    any_failed = any_failed || failed(r.verdict);
  }
  csv.close();
  bool decreasing = true;
  for (std::size_t i = 1; i < s.rows.size(); ++i) {
    decreasing = decreasing && s.rows[i].l1_dist < s.rows[i - 1].l1_dist + 1e-9;
  }
  Json j = header(ctx, "sweep-beta-inf");
  j["rows"] = rows;
  j["l1_decreasing"] = decreasing;
  if (c.heatmaps) {
    write_pgm(c.out_dir / "envelope.pgm", s.envelope);
    write_pgm(c.out_dir / "v_final.pgm", s.solutions.back());
  }
  stamp_time(ctx, j);
  write_json(c.out_dir / "sweep.json", j);
  std::cout << "sweep-beta-inf: " << s.rows.size() << " rows, final L1 distance "
            << format_double(s.rows.back().l1_dist) << "\n";
  return any_failed ? kSolverFailure : kOk;
}

int cmd_report(Context& ctx) {
  const RunConfig& c = ctx.config;
  const SolveResult r = solve(c.beta, ctx.mu0, ctx.omega, solver_params(c));
  Json j = header(ctx, "report");
  j.update(solve_summary(r, ctx));
  Json checks;
  checks["converged"] = r.verdict == SolveVerdict::Converged;
  checks["residual_within_tolerance"] = r.residual_linf <= c.tol_residual;
  checks["gap_within_tolerance"] = r.gap <= c.tol_gap;
  if (r.u_star.admissible(default_psh_tolerance(ctx.omega.grid()))) {
    const Potential& u = r.u_star;
    const double I = aubin_I(u, ctx.omega);
    const double J = aubin_J(u, ctx.omega);
    const Measure ma = ma_measure(u, ctx.omega);
    const double e_ma = measure_energy(ma, ctx.omega);
    const Potential un = make_potential(normalize_against(u.u, ctx.omega), ctx.omega);
    const double pairing = -integrate(un.u, ma_measure(un, ctx.omega));
    checks["identity_I_equals_2J"] = std::abs(I - 2 * J) <= 1e-9 * (1 + I);
    checks["energy_of_ma_equals_J"] = std::abs(e_ma - J) <= 1e-9;
    checks["pairing_equals_2E"] = std::abs(pairing - 2 * e_ma) <= 1e-9;
    double mass_err = 0.0;
    for (std::size_t k = 0; k < ma.node_mass().size(); ++k) {
      mass_err = std::max(mass_err, std::abs(ma.mass(k) - r.mu_star.mass(k)));
    }
    checks["mu_star_is_ma_of_u_star"] = mass_err <= 1e-10;
  } else {
    checks["admissible"] = false;
  }
  const EnvelopeResult e = envelope_zero(ctx.omega);
  checks["envelope_complementarity"] = e.lcp_residual <= 1e-8;
  checks["envelope_orthogonality"] =
      orthogonality_residual(ScalarField(ctx.omega.grid()), ctx.omega) <= 1e-7;
  bool all = true;
  for (const auto& [k, v] : checks.items()) all = all && v.get<bool>();
  j["checks"] = checks;
  j["all_pass"] = all;
  stamp_time(ctx, j);
  write_json(c.out_dir / "report.json", j);
  std::cout << "report: " << to_string(r.verdict) << ", checks " << (all ? "pass" : "fail")
            << "\n";
  return failed(r.verdict) ? kSolverFailure : kOk;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Mean-field equations, envelopes and alpha invariants on the flat torus", "mfe"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::optional<double> beta;
  std::optional<int> grid;
  std::optional<std::string> out;
  app.add_option("--config", config_path, "Run configuration file");
  app.add_option("--beta", beta, "Override solver.beta");
  app.add_option("--grid", grid, "Override grid.n_side");
  app.add_option("--out", out, "Override output.dir");
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"solve", "Solve the mean-field equation at solver.beta"},
      {"envelope", "Compute the psh envelope P(0) of the background form"},
      {"duality", "Solve and certify the F/G duality on random probes"},
      {"alpha", "Estimate the alpha invariant and Frostman exponent of the measure"},
      {"mt", "Fit the Moser-Trudinger constant"},
      {"sweep-beta-inf", "Sweep beta upwards and measure the distance to P(0)"},
      {"report", "Aggregate functionals at the solution and run the identity checks"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "mfe: " << e.what() << "\n";
    return kConfigError;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  std::optional<Context> ctx;
  try {
    RunConfig config = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (beta) config.beta = *beta;
    if (grid) config.n_side = *grid;
    if (out) config.out_dir = *out;
    validate(config);
    BackgroundForm omega = make_form(config);
    Measure mu0 = make_measure(config);
    fs::create_directories(config.out_dir);
    ctx.emplace(Context{std::move(config), std::move(omega), std::move(mu0),
                        std::chrono::steady_clock::now()});
  } catch (const ConfigError& e) {
    std::cerr << "mfe: config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const KltViolation& e) {
    std::cerr << "mfe: config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const InvalidArgument& e) {
    std::cerr << "mfe: config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "mfe: cannot create output directory: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    if (command == "solve") return cmd_solve(*ctx);
    if (command == "envelope") return cmd_envelope(*ctx);
    if (command == "duality") return cmd_duality(*ctx);
    if (command == "alpha") return cmd_alpha(*ctx);
    if (command == "mt") return cmd_mt(*ctx);
    if (command == "sweep-beta-inf") return cmd_sweep(*ctx);
    return cmd_report(*ctx);
  } catch (const std::exception& e) {
    std::cerr << "mfe " << command << ": " << e.what() << "\n";
    return kRuntimeError;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace mfe::cli
