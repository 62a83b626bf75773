// hartree-lab: command-line front end.
//
//   hartree-lab exponents --p 3 --gamma 2 [--json]
//   hartree-lab kato --potential gaussian:amplitude=0.5,width=2
//   hartree-lab ground-state --p 3 --gamma 2
//   hartree-lab evolve --config configs/scatter_c05.ini
//   hartree-lab morawetz --config configs/scatter_c05.ini
//   hartree-lab sweep --config configs/threshold_sweep.ini --axis c --values 0.3,0.5,0.8
//
// Every subcommand writes into --output-dir (default ./out).
// Exit codes: 0 all verdicts pass, 1 some verdict failed, 2 bad input.

#include "hartree_lab.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

using namespace hlab;
using detail::num;

void write_json(const fs::path& path, const ordered_json& j) {
  fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << j.dump(2) << "\n";
}

int cmd_exponents(double p, double gamma, double eps, bool as_json, const fs::path& out) {
  const ModelParams m{p, gamma, eps};
  const auto e = scattering_pairs(m);
  const auto checks = identity_checks(e, p);
  ordered_json j;
  j["model"] = {{"p", num(p)}, {"gamma", num(gamma)}, {"epsilon", num(eps)}};
  j["intercritical"] = m.intercritical();
  j["exponents"] = {{"s_c", num(e.s_c)},         {"sigma_c", num(e.sigma_c)},   {"A", num(e.A)},
                    {"B", num(e.B)},             {"r_bar", num(e.r_bar)},       {"a_bar", num(e.a_bar)},
                    {"p_tilde", num(e.p_tilde)}, {"r3_minus", num(e.r3_minus)}, {"q4_plus", num(e.q4_plus)},
                    {"q", num(e.q)},             {"r", num(e.r)},               {"m", num(e.m)},
                    {"n", num(e.n)},             {"s", num(e.s)},               {"theta", num(e.theta)},
                    {"theta_bar", num(e.theta_bar)}};
  bool ok = true;
  ordered_json ids = ordered_json::array();
  for (const auto& c : checks) {
    ids.push_back({{"name", c.name}, {"defect", num(c.defect)}, {"pass", c.pass}});
    ok = ok && c.pass;
  }
  j["identities"] = ids;
  write_json(out / "exponents.json", j);
  if (as_json) {
    std::printf("%s\n", j.dump(2).c_str());
    return ok ? 0 : 1;
  }
  std::printf("s_c = %s  sigma_c = %s  A = %s  B = %s\n", shortest(e.s_c).c_str(), shortest(e.sigma_c).c_str(),
              shortest(e.A).c_str(), shortest(e.B).c_str());
  for (const auto& c : checks) std::printf("  %-34s %-4s %.3g\n", c.name.c_str(), c.pass ? "ok" : "FAIL", c.defect);
  return ok ? 0 : 1;
}

int cmd_kato(const std::string& spec, double r_max, std::size_t n, const fs::path& out) {
  const auto V = parse_potential(spec);
  auto grid = RadialGrid::make(r_max, n);
  const auto a = audit_hypotheses(V, *grid);
  ordered_json j;
  j["potential"] = V.describe();
  j["kato_norm"] = num(a.kato_norm);
  j["kato_argmax"] = num(a.kato_argmax);
  j["kato_norm_negative_part"] = num(a.kato_norm_negative_part);
  j["l32_norm"] = num(a.l32_norm);
  j["l32_norm_quadrature"] = num(a.l32_norm_quadrature);
  ordered_json lr = ordered_json::object();
  for (const auto& [q, v] : a.x_grad_V_lr_norms) lr[shortest(q)] = num(v);
  j["x_grad_V_norms"] = lr;
  j["nonneg"] = a.nonneg;
  j["radial_derivative_sign"] = a.radial_derivative_sign;
  j["hypotheses"] = a.theorem_hypotheses();
  j["failures"] = a.failures;
  write_json(out / "kato.json", j);
  std::printf("%s\n  Kato norm %s (at |x| = %s)\n  L^3/2 norm %s\n", V.describe().c_str(),
              shortest(a.kato_norm).c_str(), shortest(a.kato_argmax).c_str(), shortest(a.l32_norm).c_str());
  for (const auto& f : a.failures) std::printf("  hypothesis fails: %s\n", f.c_str());
  return a.theorem_hypotheses() ? 0 : 1;
}

int cmd_kato_shipped(double r_max, std::size_t n, const fs::path& out) {
  auto grid = RadialGrid::make(r_max, n);
  ordered_json j = ordered_json::array();
  bool ok = true;
  for (const auto& [name, V, expected] : shipped_potentials()) {
    const auto a = audit_hypotheses(V, *grid);
    const bool as_expected = a.theorem_hypotheses() == expected;
    ok = ok && as_expected;
    j.push_back({{"name", name},
                 {"potential", V.describe()},
                 {"kato_norm", num(a.kato_norm)},
                 {"hypotheses", a.theorem_hypotheses()},
                 {"expected", expected},
                 {"failures", a.failures}});
    std::printf("  %-20s %-6s %s\n", name.c_str(), a.theorem_hypotheses() ? "passes" : "fails",
                a.failures.empty() ? "" : a.failures.front().c_str());
  }
  write_json(out / "kato_shipped.json", j);
  return ok ? 0 : 1;
}

int cmd_ground_state(double p, double gamma, double eps, double r_max, std::size_t n,
                     const std::vector<std::string>& seeds, GroundStateOptions opt, const fs::path& out) {
  const ModelParams m{p, gamma, eps};
  auto grid = RadialGrid::make(r_max, n);
  RieszKernel kern(gamma, grid);
  opt.seeds.clear();
  for (const auto& s : seeds) {
    if (s == "gaussian") opt.seeds.push_back(SeedProfile::gaussian);
    else if (s == "sech") opt.seeds.push_back(SeedProfile::sech);
    else if (s == "wide_gaussian") opt.seeds.push_back(SeedProfile::wide_gaussian);
    else throw std::invalid_argument("unknown seed '" + s + "'");
  }
  const auto gs = solve_ground_state(m, kern, opt);
  const auto e = scattering_pairs(m);
  const auto ph = pohozaev_check(gs, e);
  const auto c = sharp_constant(gs, e);
  const auto tf = threshold_functions(gs, e);
  fs::create_directories(out);
  write_field_csv((out / "ground_state.csv").string(), gs.Q);
  ordered_json j;
  j["model"] = {{"p", num(p)}, {"gamma", num(gamma)}};
  j["grid"] = {{"r_max", num(r_max)}, {"n", n}};
  j["residual"] = num(gs.residual);
  j["iterations"] = gs.iterations;
  j["Q0"] = num(gs.Q[0].real());
  j["mass"] = num(gs.mass);
  j["grad_norm_sq"] = num(gs.grad_norm_sq);
  j["P"] = num(gs.P);
  j["E0"] = num(gs.E0);
  j["positive"] = gs.positive;
  j["monotone"] = gs.monotone;
  j["pohozaev"] = {{"energy_vs_grad", num(ph.energy_vs_grad)},
                   {"energy_vs_mass", num(ph.energy_vs_mass)},
                   {"potential", num(ph.potential)},
                   {"pass", ph.pass}};
  j["C_op"] = {{"direct", num(c.direct)}, {"pohozaev", num(c.pohozaev)}, {"disagreement", num(c.disagreement)}};
  j["thresholds"] = {{"PQ_MQ_sigma", num(gs.thresholds.PQ_MQ_sigma)},
                     {"ME_threshold", num(gs.thresholds.ME_threshold)},
                     {"grad_mass_threshold", num(gs.thresholds.grad_mass_threshold)}};
  j["threshold_functions"] = {{"x0", num(tf.x0)}, {"g_defect", num(tf.g_defect)}, {"f_at_one", num(tf.f_at_one)},
                              {"pass", tf.pass}};
  ordered_json cand = ordered_json::array();
  for (const auto& s : gs.candidates) {
    cand.push_back({{"seed", to_string(s.seed)},
                    {"converged", s.converged},
                    {"residual", num(s.residual)},
                    {"iterations", s.iterations},
                    {"scaled_energy", num(s.scaled_energy)},
                    {"distance", num(s.distance)}});
  }
  j["candidates"] = cand;
  j["ambiguous"] = gs.ambiguous;
  write_json(out / "ground_state.json", j);
  std::printf("Q(0) = %s  residual = %.2e  iterations = %zu\n", shortest(gs.Q[0].real()).c_str(), gs.residual,
              gs.iterations);
  std::printf("M = %s  |grad Q|^2 = %s  P = %s  E0 = %s  C_op = %s\n", shortest(gs.mass).c_str(),
              shortest(gs.grad_norm_sq).c_str(), shortest(gs.P).c_str(), shortest(gs.E0).c_str(),
              shortest(gs.C_op).c_str());
  std::printf("Pohozaev %s, threshold functions %s\n", ph.pass ? "ok" : "FAIL", tf.pass ? "ok" : "FAIL");
  return ph.pass && tf.pass && !gs.ambiguous ? 0 : 1;
}

int report_run(const RunReport& r, const fs::path& out) {
  std::printf("wrote %s\n", (out / "summary.json").string().c_str());
  for (const auto& [name, v] : r.summary["verdicts"].items()) {
    std::printf("  %-22s %s\n", name.c_str(), v["pass"].get<bool>() ? "pass" : "FAIL");
  }
  return r.exit_code;
}

int cmd_evolve(const fs::path& config, const fs::path& out) {
  const auto s = load_scenario(config);
  return report_run(run_scenario(s, out), out);
}

int cmd_morawetz(const fs::path& config, const fs::path& out) {
  auto s = load_scenario(config);
  // make sure the Morawetz block and the monitor are part of the verdict
  if (s.diagnostics.morawetz_R.empty()) s.diagnostics.morawetz_R = {s.evolve.ball_radii.front()};
  if (!s.diagnostics.monitor) {
    s.diagnostics.monitor = true;
    s.diagnostics.monitor_R = s.evolve.ball_radii.front();
  }
  return report_run(run_scenario(s, out), out);
}

int cmd_sweep(const fs::path& config, const std::string& axis, const std::vector<double>& values, unsigned threads,
              const fs::path& out) {
  const auto s = load_scenario(config);
  const auto rep = sweep(s, parse_axis(axis), values, out, threads);
  std::printf("wrote %s\n", (out / "sweep.csv").string().c_str());
  for (const auto& row : rep.rows) {
    std::printf("  %s = %-10s %-5s %s\n", axis.c_str(), shortest(row.value).c_str(), row.status.c_str(),
                row.error.c_str());
  }
  return rep.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hartree-lab: radial generalized Hartree equation laboratory"};
  app.require_subcommand(1);
  std::string out_dir = "out";
  app.add_option("--output-dir", out_dir, "directory for all outputs")->capture_default_str();

  double p = 3.0, gamma = 2.0, eps = 1e-3, r_max = 40.0;
  std::size_t n = 2048;
  auto model_opts = [&](CLI::App* sub) {
    sub->add_option("--p", p, "nonlinearity power")->capture_default_str();
    sub->add_option("--gamma", gamma, "Riesz order")->capture_default_str();
    sub->add_option("--eps", eps, "pair perturbation")->capture_default_str();
  };
  auto grid_opts = [&](CLI::App* sub) {
    sub->add_option("--r-max", r_max, "outer radius")->capture_default_str();
    sub->add_option("--n", n, "interior nodes")->capture_default_str();
  };

  auto* exps = app.add_subcommand("exponents", "exponent set and identity checks");
  model_opts(exps);
  bool as_json = false;
  exps->add_flag("--json", as_json, "print the JSON record instead of the table");

  std::string potential = "step:amplitude=1,radius=1";
  auto* kato = app.add_subcommand("kato", "Kato norm and potential hypothesis audit");
  kato->add_option("--potential", potential, "kind:key=value,... (zero, gaussian, inverse_power, step)")
      ->capture_default_str();
  bool shipped = false;
  kato->add_flag("--shipped", shipped, "audit the shipped examples and counterexamples instead");
  grid_opts(kato);

  std::vector<std::string> seeds{"gaussian"};
  auto* gsc = app.add_subcommand("ground-state", "solve for Q and certify it");
  model_opts(gsc);
  grid_opts(gsc);
  gsc->add_option("--seeds", seeds, "gaussian, sech, wide_gaussian")->delimiter(',');
  GroundStateOptions gs_opt;
  gsc->add_option("--tol", gs_opt.tol, "residual tolerance, relative to max Q")->capture_default_str();
  gsc->add_option("--max-iter", gs_opt.max_iter, "iteration cap per seed")->capture_default_str();

  std::string config;
  auto* ev = app.add_subcommand("evolve", "run a scenario");
  ev->add_option("--config", config, "scenario file")->required()->check(CLI::ExistingFile);
  auto* mor = app.add_subcommand("morawetz", "run a scenario with the Morawetz and monitor reports");
  mor->add_option("--config", config, "scenario file")->required()->check(CLI::ExistingFile);

  std::string axis;
  std::vector<double> values;
  unsigned threads = 0;
  auto* sw = app.add_subcommand("sweep", "run a scenario over one parameter axis");
  sw->add_option("--config", config, "template scenario file")->required()->check(CLI::ExistingFile);
  sw->add_option("--axis", axis, "c, p, gamma, R, dt or n")->required();
  sw->add_option("--values", values, "comma-separated values")->delimiter(',');
  sw->add_option("--threads", threads, "worker cap (default: HARTREE_LAB_THREADS or all cores)");

  CLI11_PARSE(app, argc, argv);
  const fs::path out(out_dir);
  try {
    if (exps->parsed()) return cmd_exponents(p, gamma, eps, as_json, out);
    if (kato->parsed()) return shipped ? cmd_kato_shipped(r_max, n, out) : cmd_kato(potential, r_max, n, out);
    if (gsc->parsed()) return cmd_ground_state(p, gamma, eps, r_max, n, seeds, gs_opt, out);
    if (ev->parsed()) return cmd_evolve(config, out);
    if (mor->parsed()) return cmd_morawetz(config, out);
    if (sw->parsed()) return cmd_sweep(config, axis, values, threads, out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
