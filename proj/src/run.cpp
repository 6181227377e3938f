#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>

#include "hess/io.hpp"

namespace hess::io {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string iso_now() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

model::ProblemSpec build_problem(const RunConfig& cfg) {
  auto A = model::make_A(cfg.a_name, cfg.n, cfg.params);
  if (cfg.manufactured) {
    auto us = model::make_u_star(cfg.u_star, cfg.n, cfg.u_star_mu,
                                 Vec::Zero(cfg.n));
    auto B = model::manufactured_B(A, cfg.k, us);
    auto val = us.value;
    return model::make_problem(cfg.n, cfg.k, cfg.box, std::move(A),
                               std::move(B),
                               [val](const Vec& x) { return val(x); });
  }
  auto B = model::make_B(cfg.b_name, cfg.n, cfg.params);
  const double mu = cfg.phi_mu;
  return model::make_problem(
      cfg.n, cfg.k, cfg.box, std::move(A), std::move(B),
      [mu](const Vec& x) { return 0.5 * mu * x.squaredNorm(); });
}

void print_cert(const structure::CertificateReport& r) {
  std::printf("[structure] %-28s %-12s margin=%.6g threshold=%.6g\n",
              r.condition.c_str(), structure::to_string(r.verdict),
              r.margin, r.threshold);
}

int run_structure(const RunConfig& cfg, json& results) {
  auto A = model::make_A(cfg.a_name, cfg.n, cfg.params);
  auto B = cfg.manufactured
               ? model::manufactured_B(
                     A, cfg.k,
                     model::make_u_star(cfg.u_star, cfg.n, cfg.u_star_mu,
                                        Vec::Zero(cfg.n)))
               : model::make_B(cfg.b_name, cfg.n, cfg.params);

  std::vector<structure::CertificateReport> reps;
  reps.push_back(structure::check_regular(A, cfg.checks, cfg.strict));
  reps.push_back(structure::check_Btilde_convex(B, cfg.k, cfg.checks));
  auto mono = structure::check_monotone(A, B, cfg.k, cfg.checks);
  reps.push_back(mono.first);
  reps.push_back(mono.second);
  reps.push_back(structure::check_domain_convex(
      structure::box_face_frames(cfg.box, 4), A, cfg.k, 0.0, cfg.checks));

  json arr = json::array();
  bool failed = false;
  for (const auto& r : reps) {
    print_cert(r);
    arr.push_back(to_json(r));
    failed = failed || r.verdict == structure::Verdict::Fails;
  }
  results["checks"] = arr;
  return failed ? kExitCheckFailed : kExitOk;
}

int solve_with(const model::ProblemSpec& P, const RunConfig& cfg,
               json& results, const fs::path& out,
               solver::SolveResult* keep = nullptr) {
  auto res = solver::solve(P, cfg.m, cfg.solver);
  results["solve"] = to_json(res.report);
  std::printf("[solve] converged=%d iterations=%d residual=%.3g margin=%.3g\n",
              res.report.converged ? 1 : 0, res.report.newton_iterations,
              res.report.final_residual, res.report.final_margin);
  if (!res.report.converged) return kExitNoConvergence;
  emit_field(res.u, (out / "solution.csv").string());
  if (keep) *keep = std::move(res);
  return kExitOk;
}

int run_solve(const RunConfig& cfg, json& results, const fs::path& out) {
  auto P = build_problem(cfg);
  return solve_with(P, cfg, results, out);
}

int run_verify(const RunConfig& cfg, json& results, const fs::path& out) {
  auto P = build_problem(cfg);
  solver::SolveResult res;
  int rc = solve_with(P, cfg, results, out, &res);
  if (rc != kExitOk) return rc;

  auto audit = verify::d2_stats(res.u, P);
  results["d2"] = to_json(audit);
  std::printf("[verify] d2: sup_int=%.6g sup_bnd=%.6g c_emp=%.6g dnn_err=%.3g\n",
              audit.sup_interior, audit.sup_boundary, audit.c_emp,
              audit.dnn_max_err);

  grid::GridField usub = verify::gap_subfield(res.u, cfg.gap_c);
  auto interior = verify::interior_barrier_audit(res.u, usub, P, cfg.K_list,
                                                 cfg.eps1_list, cfg.c_cap);
  results["interior_barrier"] = to_json(interior);
  std::printf("[verify] interior barrier: informative=%d rows=%zu\n",
              interior.informative ? 1 : 0, interior.table.size());

  auto sweep = verify::boundary_barrier_sweep(res.u, usub, P, cfg.face,
                                              cfg.barrier.M, cfg.barrier.eps1);
  results["boundary_barrier"] =
      json{{"found", sweep.found},
           {"tried", sweep.tried},
           {"params",
            {{"K", sweep.params.K},
             {"eps1", sweep.params.eps1},
             {"mu", sweep.params.mu},
             {"N", sweep.params.N},
             {"delta", sweep.params.delta},
             {"M", sweep.params.M}}},
           {"report", to_json(sweep.report)}};
  std::printf("[verify] boundary barrier: found=%d tried=%d\n",
              sweep.found ? 1 : 0, sweep.tried);

  // On a discrete solution the one-sided boundary jets carry O(h^2)
  // truncation, so the identity budget must scale with the grid rather than
  // use the exact-field default.
  double budget = cfg.decomp_budget;
  if (budget <= 0) {
    const double hf = res.u.h(cfg.face.axis);
    double bmax = 0.0;
    grid::for_each_node(res.u, [&](const std::vector<int>& idx, std::size_t) {
      int faces = 0;
      for (int a = 0; a < res.u.n(); ++a)
        faces += (idx[a] == 0) + (idx[a] == res.u.m[a] - 1);
      bool on_face = cfg.face.side == 0 ? idx[cfg.face.axis] == 0
                                        : idx[cfg.face.axis] == res.u.m[cfg.face.axis] - 1;
      if (faces != 1 || !on_face) return;
      grid::Jet2 J = grid::node_jet(res.u, idx);
      Vec x = res.u.node_x(idx);
      bmax = std::max(bmax, std::abs(P.B.value(x, J.z, J.p)));
    });
    budget = 10.0 * hf * hf * (1.0 + bmax);
  }
  auto decomp = verify::boundary_decomposition_check(res.u, P, cfg.face, budget);
  results["decomposition"] = to_json(decomp);
  print_cert(decomp);

  auto trace = verify::trace_ellipticity_check(res.u, P);
  results["trace"] = to_json(trace);
  print_cert(trace);

  bool failed = decomp.verdict == structure::Verdict::Fails ||
                trace.verdict == structure::Verdict::Fails;
  return failed ? kExitCheckFailed : kExitOk;
}

int run_sweep(const RunConfig& cfg, json& results, const fs::path& out) {
  auto P = build_problem(cfg);
  json rows = json::array();
  std::string csv =
      "m,converged,newton_iterations,final_residual,final_margin,c_emp\n";
  bool all_ok = true;
  for (const auto& mspec : cfg.sweep_m) {
    auto res = solver::solve(P, mspec, cfg.solver);
    json row;
    row["m"] = mspec;
    row["converged"] = res.report.converged;
    row["newton_iterations"] = res.report.newton_iterations;
    row["final_residual"] = res.report.final_residual;
    row["final_margin"] = res.report.final_margin;
    std::string mtag;
    for (std::size_t a = 0; a < mspec.size(); ++a)
      mtag += (a ? "x" : "") + std::to_string(mspec[a]);
    if (res.report.converged) {
      double c_emp = verify::d2_stats(res.u, P).c_emp;
      row["c_emp"] = c_emp;
      csv += mtag + ",1," + std::to_string(res.report.newton_iterations) +
             "," + fmt17(res.report.final_residual) + "," +
             fmt17(res.report.final_margin) + "," + fmt17(c_emp) + "\n";
    } else {
      row["c_emp"] = json();
      csv += mtag + ",0," + std::to_string(res.report.newton_iterations) +
             "," + fmt17(res.report.final_residual) + "," +
             fmt17(res.report.final_margin) + ",\n";
      all_ok = false;
    }
    std::printf("[sweep] m=%s converged=%d residual=%.3g\n", mtag.c_str(),
                res.report.converged ? 1 : 0, res.report.final_residual);
    rows.push_back(row);
  }
  write_text(out / "summary.csv", csv);
  results["sweep"] = rows;
  return all_ok ? kExitOk : kExitNoConvergence;
}

// Small embedded matrix: value oracles plus one run per exit code.
int run_selftest(const RunConfig& cfg, json& results, const fs::path& out) {
  struct Case {
    std::string name;
    bool pass;
  };
  std::vector<Case> cases;
  auto add = [&](const std::string& name, bool ok) {
    cases.push_back({name, ok});
    std::printf("[selftest] %-36s %s\n", name.c_str(), ok ? "PASS" : "FAIL");
  };

  {
    Vec lam(3);
    lam << 1.0, 2.0, 3.0;
    add("elem_sym exact values",
        symfun::elem_sym(lam, 2) == 11.0 && symfun::elem_sym(lam, 3) == 6.0);
  }
  {
    Mat M(3, 3);
    M << 2.0, 0.5, 0.0, 0.5, 3.0, 0.0, 0.0, 0.0, 4.0;
    auto fg = symfun::matrix_F_grad(SymMat(M), 2);
    // S_2 of the matrix by the 2x2 principal minors
    double s2 = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j)
        s2 += M(i, i) * M(j, j) - M(i, j) * M(j, i);
    add("matrix S_2 equals minor sum", std::abs(fg.Sj[1] - s2) < 1e-12 * s2);
  }
  {
    Box box{Vec::Constant(2, -1.0), Vec::Constant(2, 1.0)};
    auto u = grid::make_field(box, {5, 7}, [](const Vec& x) {
      return std::sin(3.0 * x[0]) + 0.25 * x[1] * x[1] * x[0];
    });
    auto p = (out / "selftest_field.csv").string();
    emit_field(u, p);
    auto r = read_field(p);
    bool same = r.m == u.m && r.v.size() == u.v.size();
    for (std::size_t i = 0; same && i < u.v.size(); ++i)
      same = r.v[i] == u.v[i];
    add("field csv round trip bitwise", same);
  }
  {
    bool ok = false;
    try {
      parse_config_text(
          R"({"command":"solve","problem":{"catalog":"zero_A_const_B","n":2,"k":3},"grid":{"m":[9,9]}})");
    } catch (const ConfigError& e) {
      ok = std::string(e.what()).find("/problem/k") != std::string::npos;
    }
    add("config rejects k > n with pointer", ok);
  }
  {
    bool ok = false;
    try {
      parse_config_text(
          R"({"command":"solve","problem":{"n":2,"n":2,"k":1},"grid":{"m":[9,9]}})");
    } catch (const ConfigError& e) {
      ok = std::string(e.what()).find("duplicate") != std::string::npos;
    }
    add("config rejects duplicate keys", ok);
  }
  {
    RunConfig c = parse_config_text(
        R"({"command":"solve","problem":{"catalog":"zero_A_const_B","n":2,"k":1},"grid":{"m":[9,9]}})");
    c.out_dir = (out / "exit0").string();
    add("exit 0: quadratic solve", run_command(c).exit_code == kExitOk);
  }
  {
    RunConfig c = parse_config_text(
        R"({"command":"structure","problem":{"catalog":"conformal_A_as_printed_const_B","n":3,"k":2},)"
        R"("checks":{"seed":1,"samples":{"nx":6,"nz":3,"np":8,"npairs":2}}})");
    c.out_dir = (out / "exit2").string();
    add("exit 2: regularity violation detected",
        run_command(c).exit_code == kExitCheckFailed);
  }
  {
    RunConfig c = parse_config_text(
        R"({"command":"solve","problem":{"catalog":"zero_A_const_B","n":2,"k":2,"phi_mu":-0.2},)"
        R"("grid":{"m":[9,9]},"solver":{"max_newton":1,"homotopy_stages":0}})");
    c.solver.max_bisect = 0;
    c.out_dir = (out / "exit3").string();
    add("exit 3: starved Newton budget",
        run_command(c).exit_code == kExitNoConvergence);
  }
  {
    bool ok = false;
    try {
      parse_config_text(R"({"command":"frobnicate"})");
    } catch (const ConfigError&) {
      ok = true;  // CLI maps ConfigError to exit 4
    }
    add("exit 4: unknown command rejected", ok);
  }

  int passed = 0;
  json arr = json::array();
  for (const auto& c : cases) {
    passed += c.pass ? 1 : 0;
    arr.push_back({{"name", c.name}, {"pass", c.pass}});
  }
  std::printf("[selftest] passed %d / %zu\n", passed, cases.size());
  results["selftest"] = {{"passed", passed},
                         {"total", cases.size()},
                         {"cases", arr}};
  (void)cfg;
  return passed == static_cast<int>(cases.size()) ? kExitOk : kExitCheckFailed;
}

}  // namespace

RunReport run_command(const RunConfig& cfg) {
  fs::path out(cfg.out_dir);
  fs::create_directories(out);

  json doc;
  doc["version"] = kVersion;
  doc["command"] = cfg.command;
  doc["config"] = cfg.echo;
  json results = json::object();
  int exit_code = kExitOk;
  try {
    if (cfg.command == "structure")
      exit_code = run_structure(cfg, results);
    else if (cfg.command == "solve")
      exit_code = run_solve(cfg, results, out);
    else if (cfg.command == "verify")
      exit_code = run_verify(cfg, results, out);
    else if (cfg.command == "sweep")
      exit_code = run_sweep(cfg, results, out);
    else if (cfg.command == "selftest")
      exit_code = run_selftest(cfg, results, out);
    else
      throw ConfigError("/command: unknown command " + cfg.command);
  } catch (const NoConvergence& e) {
    results["error"] = e.what();
    exit_code = kExitNoConvergence;
  } catch (const LinearSolveFailure& e) {
    results["error"] = e.what();
    exit_code = kExitNoConvergence;
  } catch (const AdmissibilityError& e) {
    results["error"] = e.what();
    exit_code = kExitCheckFailed;
  } catch (const PositivityError& e) {
    results["error"] = e.what();
    exit_code = kExitCheckFailed;
  }
  doc["results"] = results;
  doc["exit"] = exit_code;
  doc["timestamp"] = iso_now();
  write_text(out / "report.json", render_report(doc));
  return RunReport{std::move(doc), exit_code};
}

}  // namespace hess::io
