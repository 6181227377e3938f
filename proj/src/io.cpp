#include "hess/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace hess::io {

using nlohmann::json;

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json vec_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json finite_or_null(double v) {
  if (std::isfinite(v)) return json(v);
  return json();
}

// --- field CSV helpers ---

[[noreturn]] void bad_field(const std::string& path, const std::string& what) {
  throw FieldIoError(path + ": " + what);
}

// strict full-token numeric parses
bool parse_ll(const std::string& s, long long& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  out = std::strtoll(s.c_str(), &end, 10);
  return errno == 0 && end == s.c_str() + s.size();
}

bool parse_d(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t next = line.find(sep, pos);
    if (next == std::string::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
}

// header field "key=v1,v2,..." out of the space-separated header tail
std::string header_field(const std::vector<std::string>& toks,
                         const std::string& key, const std::string& path) {
  for (const auto& t : toks) {
    if (t.size() > key.size() + 1 && t.compare(0, key.size(), key) == 0 &&
        t[key.size()] == '=')
      return t.substr(key.size() + 1);
  }
  bad_field(path, "malformed header: missing " + key + "=");
}

}  // namespace

void emit_field(const grid::GridField& u, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FieldIoError(path + ": cannot open for writing");
  const int n = u.n();
  out << "# n=" << n << " m=";
  for (int a = 0; a < n; ++a) out << (a ? "," : "") << u.m[a];
  out << " lo=";
  for (int a = 0; a < n; ++a) out << (a ? "," : "") << fmt17(u.box.lo[a]);
  out << " hi=";
  for (int a = 0; a < n; ++a) out << (a ? "," : "") << fmt17(u.box.hi[a]);
  out << "\n";
  grid::for_each_node(u, [&](const std::vector<int>& idx, std::size_t f) {
    Vec x = u.node_x(idx);
    for (int a = 0; a < n; ++a) out << idx[a] << ",";
    for (int a = 0; a < n; ++a) out << fmt17(x[a]) << ",";
    out << fmt17(u.v[f]) << "\n";
  });
  out.flush();
  if (!out) throw FieldIoError(path + ": write failed");
}

grid::GridField read_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FieldIoError(path + ": cannot open");
  std::string line;
  if (!std::getline(in, line)) bad_field(path, "empty file");
  if (line.size() < 2 || line[0] != '#')
    bad_field(path, "malformed header: expected leading '#'");
  std::istringstream hs(line.substr(1));
  std::vector<std::string> toks;
  for (std::string t; hs >> t;) toks.push_back(t);

  long long n_ll = 0;
  if (!parse_ll(header_field(toks, "n", path), n_ll) || n_ll < 1)
    bad_field(path, "malformed header: bad n");
  const int n = static_cast<int>(n_ll);

  auto ints = split(header_field(toks, "m", path), ',');
  auto los = split(header_field(toks, "lo", path), ',');
  auto his = split(header_field(toks, "hi", path), ',');
  if (static_cast<int>(ints.size()) != n || static_cast<int>(los.size()) != n ||
      static_cast<int>(his.size()) != n)
    bad_field(path, "malformed header: m/lo/hi arity does not match n");

  std::vector<int> m(n);
  Vec lo(n), hi(n);
  for (int a = 0; a < n; ++a) {
    long long mi = 0;
    double l = 0, h = 0;
    if (!parse_ll(ints[a], mi) || mi < 2) bad_field(path, "malformed header: bad m");
    if (!parse_d(los[a], l) || !parse_d(his[a], h) || !(l < h))
      bad_field(path, "malformed header: bad lo/hi");
    m[a] = static_cast<int>(mi);
    lo[a] = l;
    hi[a] = h;
  }

  grid::GridField u = grid::make_field(Box{lo, hi}, m);
  std::vector<int> expect(n, 0);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (row >= u.size()) bad_field(path, "node count mismatch: extra rows");
    auto cells = split(line, ',');
    if (static_cast<int>(cells.size()) != 2 * n + 1)
      bad_field(path, "row " + std::to_string(row) + ": expected " +
                          std::to_string(2 * n + 1) + " fields");
    u.unflat(row, expect);
    for (int a = 0; a < n; ++a) {
      long long ia = 0;
      if (!parse_ll(cells[a], ia))
        bad_field(path, "row " + std::to_string(row) + ": bad index");
      if (ia != expect[a])
        bad_field(path, "row " + std::to_string(row) +
                            ": node order violation, expected index " +
                            std::to_string(expect[a]) + " on axis " +
                            std::to_string(a));
    }
    double val = 0;
    if (!parse_d(cells[2 * n], val))
      bad_field(path, "row " + std::to_string(row) + ": bad value");
    u.v[row] = val;
    ++row;
  }
  if (row != u.size())
    bad_field(path, "node count mismatch: got " + std::to_string(row) +
                        " rows, grid has " + std::to_string(u.size()));
  return u;
}

// --- config ------------------------------------------------------------------

namespace {

[[noreturn]] void fail(const std::string& ptr, const std::string& what) {
  throw ConfigError(what, ptr);
}

json parse_strict(const std::string& text) {
  std::vector<std::set<std::string>> stack;
  json::parser_callback_t cb = [&](int, json::parse_event_t ev, json& val) {
    if (ev == json::parse_event_t::object_start) {
      stack.emplace_back();
    } else if (ev == json::parse_event_t::object_end) {
      stack.pop_back();
    } else if (ev == json::parse_event_t::key) {
      auto k = val.get<std::string>();
      if (!stack.back().insert(k).second)
        throw ConfigError("duplicate key \"" + k + "\"");
    }
    return true;
  };
  try {
    return json::parse(text, cb, /*allow_exceptions=*/true,
                       /*ignore_comments=*/false);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("not valid JSON: ") + e.what());
  }
}

void allow_keys(const json& obj, const std::string& ptr,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed)
      if (it.key() == a) {
        ok = true;
        break;
      }
    if (!ok) fail(ptr + "/" + it.key(), "unknown key");
  }
}

const json& member(const json& obj, const char* key) { return obj.at(key); }

double get_num(const json& obj, const char* key, const std::string& ptr,
               double dflt) {
  if (!obj.contains(key)) return dflt;
  const json& v = member(obj, key);
  if (!v.is_number()) fail(ptr + "/" + key, "expected a number");
  return v.get<double>();
}

int get_int(const json& obj, const char* key, const std::string& ptr,
            int dflt) {
  if (!obj.contains(key)) return dflt;
  const json& v = member(obj, key);
  if (!v.is_number_integer()) fail(ptr + "/" + key, "expected an integer");
  return v.get<int>();
}

bool get_bool(const json& obj, const char* key, const std::string& ptr,
              bool dflt) {
  if (!obj.contains(key)) return dflt;
  const json& v = member(obj, key);
  if (!v.is_boolean()) fail(ptr + "/" + key, "expected a boolean");
  return v.get<bool>();
}

std::string get_str(const json& obj, const char* key, const std::string& ptr,
                    const std::string& dflt) {
  if (!obj.contains(key)) return dflt;
  const json& v = member(obj, key);
  if (!v.is_string()) fail(ptr + "/" + key, "expected a string");
  return v.get<std::string>();
}

std::vector<double> get_num_array(const json& v, const std::string& ptr) {
  if (!v.is_array()) fail(ptr, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) fail(ptr, "expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<int> get_int_array(const json& v, const std::string& ptr) {
  if (!v.is_array()) fail(ptr, "expected an array of integers");
  std::vector<int> out;
  for (const auto& e : v) {
    if (!e.is_number_integer()) fail(ptr, "expected an array of integers");
    out.push_back(e.get<int>());
  }
  return out;
}

// "A-name_B-name" pairs plus the one self-paired catalog entry
bool split_catalog(const std::string& s, std::string& a, std::string& b) {
  if (s == "ot_quadratic_cost") {
    a = b = s;
    return true;
  }
  static const char* a_names[] = {"zero_A",           "conformal_A_as_printed",
                                  "conformal_A_signflip", "skew_projector_A",
                                  "x_diag_A",         "u_diag_A"};
  static const char* b_names[] = {"const_B", "power_B", "exp_u_B"};
  for (const char* bn : b_names) {
    std::string suffix = std::string("_") + bn;
    if (s.size() > suffix.size() &&
        s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
      std::string head = s.substr(0, s.size() - suffix.size());
      for (const char* an : a_names)
        if (head == an) {
          a = an;
          b = bn;
          return true;
        }
    }
  }
  return false;
}

std::vector<int> grid_m(const json& v, const std::string& ptr, int n) {
  auto m = get_int_array(v, ptr);
  if (static_cast<int>(m.size()) != n)
    fail(ptr, "expected " + std::to_string(n) + " entries (one per axis)");
  for (int mi : m)
    if (mi < 4) fail(ptr, "each axis needs at least 4 nodes");
  return m;
}

solver::LinVariant parse_variant(const std::string& s, const std::string& ptr) {
  if (s == "full_newton") return solver::LinVariant::FullNewton;
  if (s == "transport") return solver::LinVariant::Transport;
  if (s == "second_order") return solver::LinVariant::SecondOrder;
  fail(ptr, "expected one of full_newton, transport, second_order");
}

const char* variant_name(solver::LinVariant v) {
  switch (v) {
    case solver::LinVariant::FullNewton: return "full_newton";
    case solver::LinVariant::Transport: return "transport";
    case solver::LinVariant::SecondOrder: return "second_order";
  }
  return "full_newton";
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const CliOverrides& ov) {
  json root = parse_strict(text);
  if (!root.is_object()) fail("", "top level must be an object");
  allow_keys(root, "", {"command", "problem", "grid", "solver", "checks",
                        "verify", "sweep", "output"});

  RunConfig cfg;

  if (!root.contains("command")) fail("/command", "required");
  if (!root["command"].is_string()) fail("/command", "expected a string");
  cfg.command = root["command"].get<std::string>();
  static const char* commands[] = {"structure", "solve", "verify", "sweep",
                                   "selftest"};
  bool known = false;
  for (const char* c : commands) known = known || cfg.command == c;
  if (!known)
    fail("/command",
         "unknown command, expected one of structure|solve|verify|sweep|selftest");
  if (!ov.command.empty() && ov.command != cfg.command)
    fail("/command", "config says \"" + cfg.command +
                         "\" but the CLI command is \"" + ov.command + "\"");

  const bool needs_problem = cfg.command != "selftest";

  // problem
  if (root.contains("problem")) {
    const json& p = root["problem"];
    if (!p.is_object()) fail("/problem", "expected an object");
    allow_keys(p, "/problem",
               {"catalog", "manufactured", "n", "k", "box", "params", "phi_mu"});
    cfg.n = get_int(p, "n", "/problem", 2);
    if (cfg.n < 1) fail("/problem/n", "must be >= 1");
    cfg.k = get_int(p, "k", "/problem", 1);
    if (cfg.k < 1) fail("/problem/k", "must be >= 1");
    if (cfg.k > cfg.n)
      fail("/problem/k", "must satisfy k <= n (problem has n = " +
                             std::to_string(cfg.n) + ")");
    if (p.contains("catalog") && p.contains("manufactured"))
      fail("/problem", "give either catalog or manufactured, not both");
    if (p.contains("manufactured")) {
      const json& man = p["manufactured"];
      if (!man.is_object()) fail("/problem/manufactured", "expected an object");
      allow_keys(man, "/problem/manufactured", {"A", "u_star", "mu"});
      cfg.manufactured = true;
      cfg.a_name = get_str(man, "A", "/problem/manufactured", "zero_A");
      cfg.u_star = get_str(man, "u_star", "/problem/manufactured", "quadratic");
      if (cfg.u_star != "quadratic" && cfg.u_star != "exp_radial")
        fail("/problem/manufactured/u_star",
             "expected quadratic or exp_radial");
      cfg.u_star_mu = get_num(man, "mu", "/problem/manufactured", 1.0);
      if (!(cfg.u_star_mu > 0))
        fail("/problem/manufactured/mu", "must be positive");
    } else {
      cfg.catalog = get_str(p, "catalog", "/problem", "zero_A_const_B");
      if (!split_catalog(cfg.catalog, cfg.a_name, cfg.b_name))
        fail("/problem/catalog", "unknown catalog pair \"" + cfg.catalog + "\"");
    }
    if (p.contains("params")) {
      const json& pr = p["params"];
      if (!pr.is_object()) fail("/problem/params", "expected an object");
      allow_keys(pr, "/problem/params", {"s", "a", "g", "slope", "b0", "t"});
      cfg.params.s = get_num(pr, "s", "/problem/params", cfg.params.s);
      cfg.params.a = get_num(pr, "a", "/problem/params", cfg.params.a);
      cfg.params.g = get_str(pr, "g", "/problem/params", cfg.params.g);
      if (cfg.params.g != "exp" && cfg.params.g != "linear")
        fail("/problem/params/g", "expected exp or linear");
      cfg.params.slope = get_num(pr, "slope", "/problem/params", cfg.params.slope);
      cfg.params.b0 = get_num(pr, "b0", "/problem/params", cfg.params.b0);
      if (!(cfg.params.b0 > 0)) fail("/problem/params/b0", "must be positive");
      cfg.params.t = get_num(pr, "t", "/problem/params", cfg.params.t);
    }
    if (p.contains("box")) {
      const json& b = p["box"];
      if (!b.is_object()) fail("/problem/box", "expected an object");
      allow_keys(b, "/problem/box", {"lo", "hi"});
      if (!b.contains("lo") || !b.contains("hi"))
        fail("/problem/box", "both lo and hi are required");
      auto lov = get_num_array(b["lo"], "/problem/box/lo");
      auto hiv = get_num_array(b["hi"], "/problem/box/hi");
      if (static_cast<int>(lov.size()) != cfg.n)
        fail("/problem/box/lo", "expected " + std::to_string(cfg.n) + " entries");
      if (static_cast<int>(hiv.size()) != cfg.n)
        fail("/problem/box/hi", "expected " + std::to_string(cfg.n) + " entries");
      Vec lo(cfg.n), hi(cfg.n);
      for (int a = 0; a < cfg.n; ++a) {
        if (!(lov[a] < hiv[a]))
          fail("/problem/box", "lo must be strictly below hi on every axis");
        lo[a] = lov[a];
        hi[a] = hiv[a];
      }
      cfg.box = Box{lo, hi};
    }
    cfg.phi_mu = get_num(p, "phi_mu", "/problem", 1.0);
  } else if (needs_problem) {
    fail("/problem", "required");
  }
  if (cfg.box.lo.size() == 0) {
    cfg.box = Box{Vec::Constant(cfg.n, -1.0), Vec::Constant(cfg.n, 1.0)};
  }

  // grid
  if (root.contains("grid")) {
    const json& g = root["grid"];
    if (!g.is_object()) fail("/grid", "expected an object");
    allow_keys(g, "/grid", {"m"});
    if (!g.contains("m")) fail("/grid/m", "required");
    cfg.m = grid_m(g["m"], "/grid/m", cfg.n);
  } else if (cfg.command == "solve" || cfg.command == "verify") {
    fail("/grid", "required for " + cfg.command);
  }

  // solver
  if (root.contains("solver")) {
    const json& s = root["solver"];
    if (!s.is_object()) fail("/solver", "expected an object");
    allow_keys(s, "/solver",
               {"rtol", "max_newton", "homotopy_stages", "variant", "init"});
    cfg.solver.r_tol = get_num(s, "rtol", "/solver", cfg.solver.r_tol);
    if (!(cfg.solver.r_tol > 0)) fail("/solver/rtol", "must be positive");
    cfg.solver.max_newton = get_int(s, "max_newton", "/solver", cfg.solver.max_newton);
    if (cfg.solver.max_newton < 1) fail("/solver/max_newton", "must be >= 1");
    cfg.solver.geometric_stages =
        get_int(s, "homotopy_stages", "/solver", cfg.solver.geometric_stages);
    if (cfg.solver.geometric_stages < 0)
      fail("/solver/homotopy_stages", "must be >= 0");
    cfg.solver.variant = parse_variant(
        get_str(s, "variant", "/solver", variant_name(cfg.solver.variant)),
        "/solver/variant");
    if (s.contains("init")) {
      const json& in = s["init"];
      if (!in.is_object()) fail("/solver/init", "expected an object");
      allow_keys(in, "/solver/init", {"mode", "mu0"});
      std::string mode = get_str(in, "mode", "/solver/init", "auto");
      if (mode != "auto")
        fail("/solver/init/mode",
             "only \"auto\" (harmonic extension plus admissibility bump) is supported");
      cfg.solver.mu0 = get_num(in, "mu0", "/solver/init", cfg.solver.mu0);
      if (!(cfg.solver.mu0 > 0)) fail("/solver/init/mu0", "must be positive");
    }
  }

  // checks
  bool seed_given = false;
  if (root.contains("checks")) {
    const json& c = root["checks"];
    if (!c.is_object()) fail("/checks", "expected an object");
    allow_keys(c, "/checks", {"seed", "samples", "tol", "strict", "workers"});
    if (c.contains("seed")) {
      const json& sd = c["seed"];
      if (!sd.is_number_integer() || sd.get<long long>() < 0)
        fail("/checks/seed", "expected a nonnegative integer");
      cfg.checks.seed = sd.get<std::uint64_t>();
      seed_given = true;
    }
    if (c.contains("samples")) {
      const json& sm = c["samples"];
      if (!sm.is_object()) fail("/checks/samples", "expected an object");
      allow_keys(sm, "/checks/samples",
                 {"nx", "nz", "np", "npairs", "z_lo", "z_hi", "p_radius"});
      cfg.checks.nx = get_int(sm, "nx", "/checks/samples", cfg.checks.nx);
      cfg.checks.nz = get_int(sm, "nz", "/checks/samples", cfg.checks.nz);
      cfg.checks.np = get_int(sm, "np", "/checks/samples", cfg.checks.np);
      cfg.checks.npairs = get_int(sm, "npairs", "/checks/samples", cfg.checks.npairs);
      if (cfg.checks.nx < 1 || cfg.checks.nz < 1 || cfg.checks.np < 1 ||
          cfg.checks.npairs < 1)
        fail("/checks/samples", "sample counts must be positive");
      cfg.checks.z_lo = get_num(sm, "z_lo", "/checks/samples", cfg.checks.z_lo);
      cfg.checks.z_hi = get_num(sm, "z_hi", "/checks/samples", cfg.checks.z_hi);
      if (!(cfg.checks.z_lo <= cfg.checks.z_hi))
        fail("/checks/samples/z_lo", "z_lo must not exceed z_hi");
      cfg.checks.p_radius =
          get_num(sm, "p_radius", "/checks/samples", cfg.checks.p_radius);
      if (!(cfg.checks.p_radius > 0))
        fail("/checks/samples/p_radius", "must be positive");
    }
    cfg.checks.tol = get_num(c, "tol", "/checks", cfg.checks.tol);
    if (cfg.checks.tol < 0) fail("/checks/tol", "must be nonnegative");
    cfg.strict = get_bool(c, "strict", "/checks", false);
    cfg.checks.workers = get_int(c, "workers", "/checks", cfg.checks.workers);
    if (cfg.checks.workers < 1) fail("/checks/workers", "must be >= 1");
  }
  if (ov.seed) {
    cfg.checks.seed = *ov.seed;
    seed_given = true;
  }
  if (cfg.command == "structure" && !seed_given)
    fail("/checks/seed", "required for sampling commands");
  cfg.checks.domain = cfg.box;

  // verify
  if (root.contains("verify")) {
    const json& v = root["verify"];
    if (!v.is_object()) fail("/verify", "expected an object");
    allow_keys(v, "/verify",
               {"K_list", "eps1_list", "C_cap", "gap_c", "decomp_budget",
                "boundary"});
    if (v.contains("K_list")) {
      cfg.K_list = get_num_array(v["K_list"], "/verify/K_list");
      for (double K : cfg.K_list)
        if (!(K > 0)) fail("/verify/K_list", "entries must be positive");
      if (cfg.K_list.empty()) fail("/verify/K_list", "must be nonempty");
    }
    if (v.contains("eps1_list")) {
      cfg.eps1_list = get_num_array(v["eps1_list"], "/verify/eps1_list");
      for (double e : cfg.eps1_list)
        if (e < 0) fail("/verify/eps1_list", "entries must be nonnegative");
      if (cfg.eps1_list.empty()) fail("/verify/eps1_list", "must be nonempty");
    }
    cfg.c_cap = get_num(v, "C_cap", "/verify", cfg.c_cap);
    if (!(cfg.c_cap > 0)) fail("/verify/C_cap", "must be positive");
    cfg.gap_c = get_num(v, "gap_c", "/verify", cfg.gap_c);
    if (!(cfg.gap_c > 0)) fail("/verify/gap_c", "must be positive");
    if (v.contains("decomp_budget")) {
      cfg.decomp_budget = get_num(v, "decomp_budget", "/verify", -1.0);
      if (cfg.decomp_budget <= 0 && cfg.decomp_budget != -1.0)
        fail("/verify/decomp_budget", "must be positive, or -1 for automatic");
    }
    if (v.contains("boundary")) {
      const json& b = v["boundary"];
      if (!b.is_object()) fail("/verify/boundary", "expected an object");
      allow_keys(b, "/verify/boundary",
                 {"face", "delta", "mu", "N", "M", "eps1"});
      int face = get_int(b, "face", "/verify/boundary", 0);
      if (face < 0 || face >= 2 * cfg.n)
        fail("/verify/boundary/face",
             "expected an index in [0, 2n), axis*2 + side");
      cfg.face = verify::Face{face / 2, face % 2};
      cfg.barrier.delta = get_num(b, "delta", "/verify/boundary", cfg.barrier.delta);
      cfg.barrier.mu = get_num(b, "mu", "/verify/boundary", cfg.barrier.mu);
      cfg.barrier.N = get_num(b, "N", "/verify/boundary", cfg.barrier.N);
      cfg.barrier.M = get_num(b, "M", "/verify/boundary", cfg.barrier.M);
      cfg.barrier.eps1 = get_num(b, "eps1", "/verify/boundary", 0.01);
      if (!(cfg.barrier.eps1 > 0))
        fail("/verify/boundary/eps1", "must be positive");
      try {
        cfg.barrier.validate();
      } catch (const std::exception& e) {
        fail("/verify/boundary", e.what());
      }
    }
  }
  if (cfg.K_list.empty()) cfg.K_list = verify::default_K_sweep();
  if (cfg.eps1_list.empty()) cfg.eps1_list = {0.0, 0.01, 0.1, 0.5};
  if (cfg.barrier.eps1 == 0.0) cfg.barrier.eps1 = 0.01;

  // sweep
  if (root.contains("sweep")) {
    const json& s = root["sweep"];
    if (!s.is_object()) fail("/sweep", "expected an object");
    allow_keys(s, "/sweep", {"m_list"});
    if (!s.contains("m_list")) fail("/sweep/m_list", "required");
    const json& ml = s["m_list"];
    if (!ml.is_array() || ml.empty())
      fail("/sweep/m_list", "expected a nonempty array of grid specs");
    for (std::size_t i = 0; i < ml.size(); ++i)
      cfg.sweep_m.push_back(
          grid_m(ml[i], "/sweep/m_list/" + std::to_string(i), cfg.n));
  } else if (cfg.command == "sweep") {
    fail("/sweep", "required for sweep");
  }

  // output
  if (root.contains("output")) {
    const json& o = root["output"];
    if (!o.is_object()) fail("/output", "expected an object");
    allow_keys(o, "/output", {"dir"});
    cfg.out_dir = get_str(o, "dir", "/output", cfg.out_dir);
    if (cfg.out_dir.empty()) fail("/output/dir", "must be nonempty");
  }
  if (ov.out_dir) cfg.out_dir = *ov.out_dir;

  // canonical echo with defaults filled
  json echo;
  echo["command"] = cfg.command;
  if (needs_problem) {
    json p;
    p["n"] = cfg.n;
    p["k"] = cfg.k;
    if (cfg.manufactured)
      p["manufactured"] = {{"A", cfg.a_name},
                           {"u_star", cfg.u_star},
                           {"mu", cfg.u_star_mu}};
    else
      p["catalog"] = cfg.catalog;
    p["box"] = {{"lo", vec_json(cfg.box.lo)}, {"hi", vec_json(cfg.box.hi)}};
    p["params"] = {{"s", cfg.params.s},   {"a", cfg.params.a},
                   {"g", cfg.params.g},   {"slope", cfg.params.slope},
                   {"b0", cfg.params.b0}, {"t", cfg.params.t}};
    p["phi_mu"] = cfg.phi_mu;
    echo["problem"] = p;
  }
  if (!cfg.m.empty()) echo["grid"] = {{"m", cfg.m}};
  if (cfg.command == "solve" || cfg.command == "verify" ||
      cfg.command == "sweep" || root.contains("solver")) {
    echo["solver"] = {{"rtol", cfg.solver.r_tol},
                      {"max_newton", cfg.solver.max_newton},
                      {"homotopy_stages", cfg.solver.geometric_stages},
                      {"variant", variant_name(cfg.solver.variant)},
                      {"init", {{"mode", "auto"}, {"mu0", cfg.solver.mu0}}}};
  }
  if (cfg.command == "structure" || root.contains("checks")) {
    json c;
    if (seed_given) c["seed"] = cfg.checks.seed;
    c["samples"] = {{"nx", cfg.checks.nx},     {"nz", cfg.checks.nz},
                    {"np", cfg.checks.np},     {"npairs", cfg.checks.npairs},
                    {"z_lo", cfg.checks.z_lo}, {"z_hi", cfg.checks.z_hi},
                    {"p_radius", cfg.checks.p_radius}};
    c["tol"] = cfg.checks.tol;
    c["strict"] = cfg.strict;
    c["workers"] = cfg.checks.workers;
    echo["checks"] = c;
  }
  if (cfg.command == "verify" || root.contains("verify")) {
    echo["verify"] = {
        {"K_list", cfg.K_list},
        {"eps1_list", cfg.eps1_list},
        {"C_cap", cfg.c_cap},
        {"gap_c", cfg.gap_c},
        {"decomp_budget", cfg.decomp_budget},
        {"boundary",
         {{"face", cfg.face.axis * 2 + cfg.face.side},
          {"delta", cfg.barrier.delta},
          {"mu", cfg.barrier.mu},
          {"N", cfg.barrier.N},
          {"M", cfg.barrier.M},
          {"eps1", cfg.barrier.eps1}}}};
  }
  if (!cfg.sweep_m.empty()) echo["sweep"] = {{"m_list", cfg.sweep_m}};
  echo["output"] = {{"dir", cfg.out_dir}};
  cfg.echo = echo;
  return cfg;
}

RunConfig load_config(const std::string& path, const CliOverrides& ov) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), ov);
}

RunConfig load_config(const std::string& path) {
  return load_config(path, CliOverrides{});
}

// --- report serialization ------------------------------------------------------

json to_json(const structure::CertificateReport& r) {
  json w;
  w["x"] = vec_json(r.witness.x);
  w["z"] = r.witness.z;
  w["p"] = vec_json(r.witness.p);
  w["xi"] = vec_json(r.witness.xi);
  w["eta"] = vec_json(r.witness.eta);
  w["node"] = r.witness.node;
  return json{{"condition", r.condition},
              {"verdict", structure::to_string(r.verdict)},
              {"margin", r.margin},
              {"threshold", r.threshold},
              {"tol", r.tol},
              {"witness", w},
              {"samples", r.samples},
              {"seed", r.seed}};
}

json to_json(const solver::SolveReport& r) {
  json stages = json::array();
  for (const auto& s : r.stages)
    stages.push_back({{"t", s.t},
                      {"iters", s.iters},
                      {"final_residual", s.final_residual},
                      {"ok", s.ok}});
  json damping = json::array();
  for (const auto& d : r.damping)
    damping.push_back({{"t", d.t},
                       {"iter", d.iter},
                       {"tau", d.tau},
                       {"res_before", d.res_before},
                       {"res_after", d.res_after},
                       {"margin_after", d.margin_after}});
  return json{{"converged", r.converged},
              {"message", r.message},
              {"mu", r.mu},
              {"newton_iterations", r.newton_iterations},
              {"final_residual", r.final_residual},
              {"final_margin", r.final_margin},
              {"stages", stages},
              {"damping", damping}};
}

json to_json(const verify::EstimateAudit& a) {
  return json{{"sup_interior", a.sup_interior},
              {"sup_boundary", a.sup_boundary},
              {"c_emp", a.c_emp},
              {"worst_interior", {{"node", a.worst_interior.node},
                                  {"value", a.worst_interior.value}}},
              {"worst_boundary", {{"node", a.worst_boundary.node},
                                  {"value", a.worst_boundary.value}}},
              {"dnn_checked", a.dnn_checked},
              {"dnn_max_err", a.dnn_max_err}};
}

json to_json(const verify::InteriorBarrierAudit& a) {
  json table = json::array();
  for (const auto& e : a.table)
    table.push_back({{"K", e.K},
                     {"eps1", e.eps1},
                     {"C", e.C},
                     {"witness", e.witness},
                     {"feasible", e.feasible}});
  return json{{"table", table},
              {"informative", a.informative},
              {"C_cap", a.c_cap},
              {"sum_F_max", a.sum_F_max},
              {"sum_F_min", a.sum_F_min},
              {"rho_bound", finite_or_null(a.rho_bound)}};
}

json to_json(const verify::BoundaryBarrierReport& r) {
  return json{{"margin_pde", r.margin_pde},
              {"margin_sign", r.margin_sign},
              {"witness_pde", r.witness_pde},
              {"witness_sign", r.witness_sign},
              {"slab_nodes", r.slab_nodes},
              {"rim_nodes", r.rim_nodes},
              {"ok", r.ok}};
}

std::string render_report(const json& doc) { return doc.dump(2) + "\n"; }

}  // namespace hess::io
