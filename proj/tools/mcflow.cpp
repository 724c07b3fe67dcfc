// mcflow: solve arrival-time fields, simulate the optimal martingales, export
// level sets, run refinement studies and the acceptance suites.
//
// Exit codes: 0 success, 1 an acceptance criterion failed, 2 invalid input,
// 3 solver did not converge (all outputs are still written).

#include "mcflow/acceptance.hpp"
#include "mcflow/io.hpp"
#include "mcflow/levelset.hpp"
#include "mcflow/martingale.hpp"
#include "mcflow/solver.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace mcflow;

namespace {

constexpr int kOk = 0;
constexpr int kVerifyFailed = 1;
constexpr int kInvalid = 2;
constexpr int kNotConverged = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

std::string face_tag(const std::vector<int>& key) {
  std::string s = "face";
  for (int v : key) s += "-" + std::to_string(v);
  return s;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

SchemeConfig scheme_from(double h, double eps, int dirs, bool no_refine, bool clip_steps, int threads) {
  if (!(h > 0.0)) throw UsageError("--h must be positive");
  SchemeConfig cfg;
  cfg.h = h;
  cfg.eps = eps;
  cfg.n_dirs = dirs;
  cfg.refine_dirs = !no_refine;
  cfg.shorten_exit_steps = !clip_steps;
  cfg.threads = threads;
  if (cfg.resolved_eps() < h) throw UsageError("--eps must be at least --h");
  return cfg;
}

// ---------------------------------------------------------------------------
// solve

struct SolveArgs {
  std::string body, out;
  double h = 1.0 / 64.0, eps = 0.0;
  int dirs = 0, threads = 0;
  bool no_refine = false, clip_steps = false;
  std::vector<double> probe;
};

/// Writes <out>.field.csv (the body's field), <out>.<face>.field.csv for the
/// lower faces of a polytope, and <out>.report.json.
int run_solve(const SolveArgs& a) {
  const Body body = load_body(a.body);
  const SchemeConfig cfg = scheme_from(a.h, a.eps, a.dirs, a.no_refine, a.clip_steps, a.threads);
  if (!a.probe.empty() && static_cast<int>(a.probe.size()) % body.ambient_dim != 0)
    throw UsageError("--probe needs a multiple of " + std::to_string(body.ambient_dim) + " coordinates");
  const HierarchicalSolve hs = body.is_polytope() ? solve_hierarchical(body, cfg) : solve_any(body, cfg);

  json report;
  report["body"] = body_to_json(body);
  report["config"] = config_to_json(cfg);
  report["fields"] = json::array();
  bool converged = true;
  for (const auto& [key, field] : hs.fields) {
    const bool top = key == hs.top_key;
    const std::string path = a.out + (top ? "" : "." + face_tag(key)) + ".field.csv";
    save_field(path, field);
    const SolveReport& rep = hs.reports.at(key);
    converged = converged && rep.converged;
    json entry = report_to_json(rep);
    entry["file"] = fs::path(path).filename().string();
    entry["face"] = key;
    entry["top"] = top;
    entry["max_value"] = field.max_value();
    report["fields"].push_back(entry);
  }
  const ValueField& top = hs.top();
  json probes = json::array();
  for (std::size_t i = 0; i < a.probe.size(); i += static_cast<std::size_t>(body.ambient_dim)) {
    const Vec x = to_vec(std::vector<double>(a.probe.begin() + static_cast<std::ptrdiff_t>(i),
                                             a.probe.begin() + static_cast<std::ptrdiff_t>(i) + body.ambient_dim));
    probes.push_back({{"x", std::vector<double>(x.data(), x.data() + x.size())}, {"value", top.interpolate(x)}});
  }
  report["probes"] = probes;
  report["converged"] = converged;
  write_json(a.out + ".report.json", report);

  for (const auto& p : probes) std::cout << "u(" << p["x"].dump() << ") = " << p["value"].get<double>() << "\n";
  const SolveReport& rep = hs.reports.at(hs.top_key);
  std::cout << "sweeps " << rep.sweeps << ", final update " << rep.final_update << ", residual median "
            << rep.residual_median << ", " << rep.wall_seconds << " s\n";
  if (!converged) {
    std::cerr << "warning: fixed-point iteration did not reach fp_tol within max_sweeps\n";
    return kNotConverged;
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string body, field, out, paths_csv, law = "auto";
  std::vector<double> x0;
  double dt = 1e-4;
  std::size_t paths = 1000;
  std::uint64_t seed = 1;
  int threads = 0;
  std::string increments = "sign";
};

/// Loads the fields written by `solve --out <prefix>`.
FaceFieldMap load_solved_fields(const std::string& prefix, std::vector<int>& top_key) {
  const json report = read_json(prefix + ".report.json");
  const fs::path dir = fs::path(prefix).parent_path();
  FaceFieldMap fields;
  for (const auto& e : report.at("fields")) {
    const auto key = e.at("face").get<std::vector<int>>();
    fields.emplace(key, load_field((dir / e.at("file").get<std::string>()).string()));
    if (e.at("top").get<bool>()) top_key = key;
  }
  if (fields.empty()) throw FormatError(prefix + ".report.json lists no fields");
  return fields;
}

int run_simulate(const SimulateArgs& a) {
  const Body body = load_body(a.body);
  if (static_cast<int>(a.x0.size()) != body.ambient_dim)
    throw UsageError("--x0 needs " + std::to_string(body.ambient_dim) + " coordinates");
  if (!(a.dt > 0.0)) throw UsageError("--dt must be positive");
  if (a.paths < 1) throw UsageError("--paths must be at least 1");
  if (a.increments != "sign" && a.increments != "gaussian") throw UsageError("--increments must be sign or gaussian");
  const Vec x0 = to_vec(a.x0);
  if (!contains(body, x0, 1e-9)) throw UsageError("--x0 lies outside the body");
  const Increments incr = a.increments == "sign" ? Increments::Sign : Increments::Gaussian;

  std::string law = a.law;
  if (law == "auto") {
    const bool cascade_kind = body.is_polytope() || body.kind() == BodyKind::Ball || body.kind() == BodyKind::Union ||
                              body.kind() == BodyKind::Segment;
    law = cascade_kind && (!body.is_polytope() || !a.field.empty()) ? "cascade" : "kernel";
  }
  FaceFieldMap fields;
  std::vector<int> top_key;
  if (!a.field.empty()) fields = load_solved_fields(a.field, top_key);

  json rep;
  rep["config"] = {{"body", a.body}, {"field", a.field}, {"law", law}, {"x0", a.x0}, {"dt", a.dt},
                   {"paths", a.paths}, {"seed", a.seed}, {"increments", a.increments}};
  std::vector<double> exit_times;
  if (law == "cascade") {
    CascadeOptions opt;
    opt.threads = a.threads;
    opt.increments = incr;
    const CascadeResult res = simulate_cascade(body, fields.empty() ? nullptr : &fields, x0, a.dt, a.paths, a.seed, opt);
    exit_times = res.exit_times;
    rep["fallback_events"] = res.fallback_events;
    rep["face_switches"] = res.switches;
  } else if (law == "kernel" || law == "isotropic") {
    ControlLaw control = IsotropicBM{};
    const ValueField* f = nullptr;
    if (law == "kernel") {
      if (fields.empty()) throw UsageError("--law kernel needs --field");
      f = &fields.at(top_key);
      control = synthesize_control(*f);
    }
    EulerOptions eo;
    eo.increments = incr;
    const auto paths = simulate_paths(control, body, x0, a.dt, a.paths, a.seed, a.threads, eo);
    std::size_t fb = 0;
    double worst = 0.0, mean_drift = 0.0, qv_dev = 0.0;
    for (const auto& p : paths) {
      exit_times.push_back(p.exit_time);
      fb += p.fallback_events;
      qv_dev = std::max(qv_dev, std::abs(p.quadratic_variation - p.exit_time));
      if (f) {
        const double d = drift_check(p, *f);
        worst = std::max(worst, d);
        mean_drift += d / static_cast<double>(paths.size());
      }
    }
    rep["fallback_events"] = fb;
    rep["max_quadratic_variation_deviation"] = qv_dev;
    if (f) rep["drift_check"] = {{"max", worst}, {"mean", mean_drift}, {"u_x0", f->interpolate(x0)}};
  } else {
    throw UsageError("--law must be auto, cascade, kernel or isotropic");
  }
  const ExitStats s = exit_statistics(exit_times);
  rep["stats"] = {{"n_paths", s.n_paths}, {"min", s.min},   {"q01", s.q01},   {"q05", s.q05},
                  {"mean", s.mean},       {"max", s.max},   {"stderr_mean", s.stderr_mean},
                  {"essinf_estimate", s.essinf_estimate}};
  if (!fields.empty()) rep["u_x0"] = fields.at(top_key).interpolate(x0);
  write_json(a.out, rep);
  if (!a.paths_csv.empty()) {
    std::ofstream csv(a.paths_csv);
    if (!csv) throw FormatError("cannot write '" + a.paths_csv + "'");
    csv.precision(17);
    csv << "path,exit_time\n";
    for (std::size_t i = 0; i < exit_times.size(); ++i) csv << i << "," << exit_times[i] << "\n";
  }
  std::cout << "paths " << s.n_paths << ": min " << s.min << ", q01 " << s.q01 << ", mean " << s.mean << " +- "
            << s.stderr_mean << ", max " << s.max << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// levelset

struct LevelsetArgs {
  std::string field, out, format = "auto";
  double t = 0.0;
};

int run_levelset(const LevelsetArgs& a) {
  const ValueField f = load_field(a.field);
  const int k = f.grid.dim();
  if (k != 2 && k != 3) throw UsageError("levelset needs a 2- or 3-dimensional field");
  if (!(a.t >= 0.0) || a.t > f.max_value()) throw UsageError("--t must lie in [0, " + std::to_string(f.max_value()) + "]");
  std::string format = a.format;
  if (format == "auto") format = k == 2 ? "csv" : "off";
  if ((format == "csv") != (k == 2)) throw UsageError("csv output is for 2-d fields, off for 3-d fields");
  const LevelSet ls = extract_levelset(f, a.t);
  std::ofstream out(a.out);
  if (!out) throw FormatError("cannot write '" + a.out + "'");
  if (format == "csv") {
    write_polylines_csv(out, ls);
    std::cout << ls.polylines.size() << " polylines\n";
  } else if (format == "off") {
    write_off(out, ls, f.grid.hull);
    std::cout << ls.mesh.vertices.size() << " vertices, " << ls.mesh.triangles.size() << " triangles\n";
  } else {
    throw UsageError("--format must be auto, csv or off");
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// refine

struct RefineArgs {
  std::string body, out;
  std::vector<double> h, probe;
  double eps = 0.0;
  int dirs = 0, threads = 0;
};

int run_refine(const RefineArgs& a) {
  const Body body = load_body(a.body);
  if (a.h.size() < 2) throw UsageError("--h needs at least two values");
  if (a.probe.empty() || static_cast<int>(a.probe.size()) % body.ambient_dim != 0)
    throw UsageError("--probe needs a multiple of " + std::to_string(body.ambient_dim) + " coordinates");
  std::vector<Vec> probes;
  for (std::size_t i = 0; i < a.probe.size(); i += static_cast<std::size_t>(body.ambient_dim))
    probes.push_back(to_vec(std::vector<double>(a.probe.begin() + static_cast<std::ptrdiff_t>(i),
                                                a.probe.begin() + static_cast<std::ptrdiff_t>(i) + body.ambient_dim)));
  SchemeConfig cfg = scheme_from(a.h.front(), 0.0, a.dirs, false, false, a.threads);
  cfg.eps = a.eps;
  std::vector<RefineRow> rows;
  try {
    rows = refine_study(body, a.h, probes, cfg);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  json j;
  j["body"] = body_to_json(body);
  j["config"] = config_to_json(cfg);
  j["rows"] = json::array();
  bool converged = true;
  for (const auto& r : rows) {
    j["rows"].push_back({{"h", r.h}, {"values", r.values}, {"diffs", r.diffs}, {"report", report_to_json(r.report)}});
    converged = converged && r.report.converged;
    std::cout << "h=" << r.h;
    for (double v : r.values) std::cout << " " << v;
    std::cout << "\n";
  }
  write_json(a.out, j);
  return converged ? kOk : kNotConverged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Arrival-time fields of the minimum curvature flow and their optimal martingales"};
  // "-h" would collide with the lattice-spacing option --h.
  app.set_help_flag("--help", "print this help message and exit");
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (default: MCFLOW_THREADS, else 1)")->check(CLI::NonNegativeNumber);

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "solve the scheme on a body");
  solve->add_option("--body", sa.body, "body JSON file")->required()->check(CLI::ExistingFile);
  solve->add_option("--h", sa.h, "lattice spacing");
  solve->add_option("--eps", sa.eps, "game step (default sqrt(h))");
  solve->add_option("--dirs", sa.dirs, "antipodal direction pairs (default 32 in 2-d, 128 in 3-d)");
  solve->add_flag("--no-refine", sa.no_refine, "use only the listed directions");
  solve->add_flag("--clip-steps", sa.clip_steps, "full-length steps clipped at the boundary");
  solve->add_option("--probe", sa.probe, "probe point coordinates (repeatable, flattened)");
  solve->add_option("--out", sa.out, "output prefix")->required();

  SimulateArgs ma;
  auto* sim = app.add_subcommand("simulate", "simulate optimal martingale exit times");
  sim->add_option("--body", ma.body, "body JSON file")->required()->check(CLI::ExistingFile);
  sim->add_option("--field", ma.field, "prefix of a solve run");
  sim->add_option("--x0", ma.x0, "start point")->required();
  sim->add_option("--dt", ma.dt, "time step");
  sim->add_option("--paths", ma.paths, "number of paths");
  sim->add_option("--seed", ma.seed, "random seed");
  sim->add_option("--law", ma.law, "auto | cascade | kernel | isotropic");
  sim->add_option("--increments", ma.increments, "sign | gaussian");
  sim->add_option("--paths-csv", ma.paths_csv, "per-path exit times");
  sim->add_option("--out", ma.out, "report JSON file")->required();

  LevelsetArgs la;
  auto* lev = app.add_subcommand("levelset", "extract {u = t} from a field");
  lev->add_option("--field", la.field, "field CSV")->required()->check(CLI::ExistingFile);
  lev->add_option("--t", la.t, "level")->required();
  lev->add_option("--format", la.format, "auto | csv | off");
  lev->add_option("--out", la.out, "output file")->required();

  RefineArgs ra;
  auto* ref = app.add_subcommand("refine", "probe values under lattice refinement");
  ref->add_option("--body", ra.body, "body JSON file")->required()->check(CLI::ExistingFile);
  ref->add_option("--h", ra.h, "decreasing list of spacings")->required();
  ref->add_option("--probe", ra.probe, "probe point coordinates (flattened)")->required();
  ref->add_option("--eps", ra.eps, "game step (default sqrt(h) per level)");
  ref->add_option("--dirs", ra.dirs, "antipodal direction pairs");
  ref->add_option("--out", ra.out, "report JSON file")->required();

  std::string suite;
  auto* ver = app.add_subcommand("verify", "run an acceptance suite");
  ver->add_option("--suite", suite, "suite name or 'all'")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*solve) {
      sa.threads = threads;
      return run_solve(sa);
    }
    if (*sim) {
      ma.threads = threads;
      return run_simulate(ma);
    }
    if (*lev) return run_levelset(la);
    if (*ref) {
      ra.threads = threads;
      return run_refine(ra);
    }
    if (*ver) {
      acceptance::Context ctx;
      ctx.threads = threads;
      ctx.log = &std::cout;
      std::vector<std::string> names = suite == "all" ? acceptance::suite_names() : std::vector<std::string>{suite};
      for (const auto& n : names) acceptance::run_suite(n, ctx);
      bool ok = true;
      for (const auto& [id, pass] : acceptance::verdicts(ctx)) {
        std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << id << "\n";
        ok = ok && pass;
      }
      return ok ? kOk : kVerifyFailed;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const GeometryError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  }
  return kOk;
}
