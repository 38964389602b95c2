#include "nlperim/run.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nlperim/certify.hpp"
#include "nlperim/error.hpp"
#include "nlperim/perimeter.hpp"
#include "nlperim/rearrange.hpp"
#include "nlperim/solver.hpp"
#include "nlperim/suites.hpp"

namespace nlperim {

namespace {

using Json = nlohmann::ordered_json;

// JSON has no infinities; they travel as strings.
Json num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

Json record(const std::string& operation, const std::string& hash, Json value,
            Json corrections = Json::object(), Json tolerances = Json::object()) {
  Json r;
  r["operation"] = operation;
  r["inputs_hash"] = hash;
  r["value"] = std::move(value);
  r["corrections"] = std::move(corrections);
  r["tolerances"] = std::move(tolerances);
  return r;
}

Json certificate_json(const Certificate& c) {
  Json j;
  j["passed"] = c.passed;
  j["c"] = num(c.c);
  j["viol_s"] = num(c.viol_s);
  j["viol_n"] = num(c.viol_n);
  j["viol_i"] = num(c.viol_i);
  j["count_s"] = c.count_s;
  j["count_n"] = c.count_n;
  j["count_i"] = c.count_i;
  j["sv_max"] = num(c.sv_max);
  j["sv_vacuous"] = c.sv_vacuous;
  j["support_radius"] = num(c.support_radius);
  j["box_radius"] = num(c.box_radius);
  return j;
}

Json certificate_tolerances(const Certificate& c) {
  return Json{{"tol_f", num(c.tol_f)}, {"tol_v", num(c.tol_v)}};
}

struct Outcome {
  Json records = Json::array();
  bool passed = true;
  std::vector<std::pair<std::string, Field>> fields;  // artifacts by stem
  std::string profile_csv;
  std::vector<std::string> lines;                      // summary for the log
};

KernelTable build_table(const RunConfig& cfg, const GridSpec& grid) {
  TabulateOptions opts;
  opts.refined_radius = cfg.kernel.refined_radius;
  return tabulate(cfg.kernel.effective(), grid, opts);
}

Field load_field(const std::string& path, const GridSpec& grid) {
  Field f = load_nlpg1(path);
  if (!(f.grid() == grid)) {
    throw ConfigError("field " + path + " lives on " + describe(f.grid()) +
                      " but the config grid is " + describe(grid));
  }
  return f;
}

void cmd_kernel(const RunConfig& cfg, const std::string& hash, Outcome& out) {
  const KernelSpec spec = cfg.kernel.effective();
  const IntegrabilityReport integ = check_integrability(spec, cfg.grid);
  out.records.push_back(record(
      "integrability", hash,
      Json{{"l1_norm", num(integ.l1_norm)},
           {"weighted_integral", num(integ.weighted_integral)},
           {"condition_int", integ.condition_int_holds},
           {"diagnostic", integ.diagnostic}},
      Json::object(), Json{{"shell_rel_tol", 1e-7}}));
  out.lines.push_back(std::string("condition (int): ") + (integ.condition_int_holds ? "holds" : "FAILS"));
  if (!integ.condition_int_holds) {
    out.passed = false;
    return;
  }
  const KernelTable table = build_table(cfg, cfg.grid);
  out.records.push_back(record("tabulate", hash,
                               Json{{"kernel_id", table.kernel_id()},
                                    {"l1_norm", num(table.l1_norm())},
                                    {"table_sum", num(table.table_sum())},
                                    {"mass_factor", num(table.mass_factor())}},
                               Json{{"tail_moment", num(table.tail_moment())},
                                    {"tail_flagged", table.tail_flagged()},
                                    {"far_tail", num(table.far_tail())},
                                    {"refined_radius", table.refined_radius()}},
                               Json{{"entry_rel_tol", 1e-6}}));
  out.lines.push_back("||K||_1 = " + num(table.l1_norm()).dump() +
                      ", mass factor = " + num(table.mass_factor()).dump());

  const auto lb = check_lower_bound(table);
  out.records.push_back(record(
      "lower_bound", hash,
      lb ? Json{{"holds", true}, {"mu", num(lb->mu)}, {"radius", num(lb->radius)}}
         : Json{{"holds", false}},
      Json::object(), Json{{"positivity", 0.0}}));
  out.lines.push_back(std::string("condition (low): ") + (lb ? "holds" : "fails"));

  GridSpec torus = cfg.grid;
  torus.mode = BoundaryMode::kPeriodic;
  const KernelTable periodic = torus == cfg.grid ? table : build_table(cfg, torus);
  const PositiveDefiniteReport pd = check_positive_definite(periodic);
  out.records.push_back(record("positive_definite", hash,
                               Json{{"is_pd", pd.is_pd},
                                    {"min_fourier_coefficient", num(pd.min_fourier_coefficient)},
                                    {"max_fourier_coefficient", num(pd.max_fourier_coefficient)}},
                               Json::object(),
                               Json{{"relative_floor", 1e-10}}));
  out.lines.push_back(std::string("positive definite: ") + (pd.is_pd ? "yes" : "no"));

  std::vector<Point3> points;
  for (int k = 1; k <= 3; ++k) points.push_back({k * cfg.grid.spacing, 0, 0});
  const std::vector<double> eps = {2 * cfg.grid.spacing, 4 * cfg.grid.spacing};
  const ConditionPosReport pos = check_condition_pos(table, points, eps);
  Json samples = Json::array();
  bool pos_ok = true;
  for (const auto& s : pos.samples) {
    samples.push_back(Json{{"x", s.x[0]}, {"eps", num(s.eps)}, {"value", num(s.value)}, {"skipped", s.skipped}});
    if (!s.skipped && s.value < 0.0) pos_ok = false;
  }
  out.records.push_back(record("condition_pos", hash, Json{{"samples", samples}, {"nonnegative", pos_ok}},
                               Json{{"warnings", pos.warnings}}, Json{{"sign", 0.0}}));
  out.lines.push_back(std::string("condition (pos) samples nonnegative: ") + (pos_ok ? "yes" : "no"));
}

void cmd_perimeter(const RunConfig& cfg, const std::string& hash, Outcome& out) {
  const KernelTable table = build_table(cfg, cfg.grid);
  const Field f = load_field(cfg.perimeter_input, cfg.grid);
  if (f.is_indicator()) {
    const PerimeterReport rep = perimeter_report(f, table);
    out.records.push_back(record("perimeter_set", hash, num(rep.value),
                                 Json{{"tail_correction", num(rep.tail_correction)},
                                      {"tail_flagged", rep.tail_flagged},
                                      {"path", rep.path}},
                                 Json{{"entry_rel_tol", 1e-6}}));
    out.lines.push_back("Per_K(E) = " + num(rep.value).dump() + " (mass " + num(mass(f)).dump() + ")");
  } else {
    const double e = relaxed_energy(f, table);
    out.records.push_back(record("relaxed_energy", hash, num(e),
                                 Json{{"tail_moment", num(table.tail_moment())}},
                                 Json{{"entry_rel_tol", 1e-6}}));
    out.lines.push_back("P_K(f) = " + num(e).dump());
  }
}

void cmd_profile(const RunConfig& cfg, const std::string& hash, Outcome& out) {
  const KernelTable table = build_table(cfg, cfg.grid);
  const ProfileTable p = isoperimetric_profile(table, cfg.profile.masses);
  std::ostringstream csv;
  write_profile_csv(csv, p);
  out.profile_csv = csv.str();
  for (std::size_t i = 0; i < p.masses.size(); ++i) {
    const double m = p.masses[i];
    const double bound = p.l1_norm * m;
    const double round = 1e-12 * std::max(1.0, bound);
    const bool ok = p.g_values[i] <= bound + round;
    out.passed = out.passed && ok;
    out.records.push_back(record(
        "profile", hash,
        Json{{"m", num(m)}, {"g", num(p.g_values[i])}, {"g_over_m", num(p.g_values[i] / m)},
             {"bound", num(bound)}, {"below_bound", ok}},
        Json::object(),
        Json{{"bound_round", num(round)},
             {"tol_iso", num(iso_tolerance(cfg.grid, m, p.l1_norm, cfg.profile.c_iso))}}));
  }
  out.lines.push_back(std::to_string(p.masses.size()) + " profile rows, g(m) <= ||K||_1 m: " +
                      (out.passed ? "yes" : "NO"));
}

void cmd_minimize(const RunConfig& cfg, const std::string& hash, Outcome& out) {
  const KernelTable table = build_table(cfg, cfg.grid);
  SolverConfig sc = *cfg.solver;
  sc.seed = cfg.seed;
  sc.certificate = cfg.certify;
  if (!cfg.solver_initial_path.empty()) sc.initial = load_field(cfg.solver_initial_path, cfg.grid);
  const SolverResult r = minimize(sc, table);
  Json history = Json::array();
  for (double e : r.history) history.push_back(num(e));
  Json runs = Json::array();
  for (const auto& run : r.runs)
    runs.push_back(Json{{"index", run.index}, {"energy", num(run.energy)},
                        {"iterations", run.iterations}, {"stagnated", run.stagnated}});
  out.records.push_back(record(
      "minimize", hash,
      Json{{"energy", num(r.energy)}, {"quad", num(r.quad)}, {"mass", num(mass(r.f))},
           {"converged", r.converged}, {"best_of", r.best_of}, {"iterations", r.iterations},
           {"method", to_string(sc.method)}, {"init", to_string(sc.init)},
           {"history", history}, {"runs", runs}},
      Json{{"tail_moment", num(table.tail_moment())}},
      Json{{"stop_tol", num(sc.stop_tol)}, {"mass_tol", 1e-14}}));
  out.records.push_back(record("certificate", hash, certificate_json(r.certificate), Json::object(),
                               certificate_tolerances(r.certificate)));
  out.fields.emplace_back("minimizer", r.f);
  out.passed = r.certificate.passed;
  out.lines.push_back("energy " + num(r.energy).dump() + " after " + std::to_string(r.iterations) +
                      " iterations (best of " + std::to_string(r.runs.size()) + " runs)");
  out.lines.push_back(std::string("certificate: ") + (r.certificate.passed ? "passed" : "FAILED") +
                      (r.converged ? ", converged" : ", not converged"));
}

void cmd_certify(const RunConfig& cfg, const std::string& hash, Outcome& out) {
  const KernelTable table = build_table(cfg, cfg.grid);
  const Field f = load_field(cfg.certify_input, cfg.grid);
  CertificateOptions opts = cfg.certify;
  opts.seed = cfg.seed;
  const Certificate c = first_variation_certificate(f, table, opts);
  const PotentialAudit a = potential_audit(f, table);
  out.records.push_back(record("potential_audit", hash,
                               Json{{"v_min", num(a.v_min)}, {"v_max", num(a.v_max)},
                                    {"bounds_ok", a.bounds_ok}, {"v_mass", num(a.v_mass)},
                                    {"expected_mass", num(a.expected_mass)}, {"mass_ok", a.mass_ok},
                                    {"boundary_shell_max", num(a.boundary_shell_max)}},
                               Json{{"tail_deficit", num(a.tail_deficit)}},
                               Json{{"upper_bound", num(a.upper_bound)},
                                    {"mass_tolerance", num(a.mass_tolerance)}}));
  out.records.push_back(
      record("certificate", hash, certificate_json(c), Json::object(), certificate_tolerances(c)));
  out.passed = c.passed;
  out.lines.push_back(std::string("certificate: ") + (c.passed ? "passed" : "FAILED") +
                      "  c = " + num(c.c).dump());
}

void cmd_check(const RunConfig& cfg, const std::string& hash, Outcome& out) {
  const auto& selected = cfg.check.suites.empty() ? suite_names() : cfg.check.suites;
  SuiteOptions opts;
  opts.trials = cfg.check.trials;
  opts.thresholds = cfg.check.thresholds;
  opts.c_iso = cfg.check.c_iso;
  opts.seed = cfg.seed;
  opts.context = cfg.canonical;
  const KernelSpec spec = cfg.kernel.effective();
  for (const auto& name : selected) {
    const SuiteResult r = run_suite(name, spec, cfg.grid, opts);
    out.passed = out.passed && r.passed;
    out.records.push_back(record(
        "check:" + name, r.inputs_hash,
        Json{{"passed", r.passed}, {"skipped", r.skipped}, {"invariant", r.invariant},
             {"trials", r.trials}, {"failures", r.failures}, {"worst", num(r.worst)},
             {"failing_input", r.failing_input}, {"detail", r.detail}},
        Json::object(), Json{{"threshold", num(r.tolerance)}, {"c_iso", num(opts.c_iso)}}));
    std::ostringstream line;
    line << std::left << std::setw(20) << name << ' '
         << (r.skipped ? "SKIP" : r.passed ? "PASS" : "FAIL") << "  " << r.detail;
    if (!r.passed) line << "  [violates: " << r.invariant << "; inputs " << r.inputs_hash << "]";
    out.lines.push_back(line.str());
  }
  (void)hash;
}

Outcome execute(const RunConfig& cfg) {
  Outcome out;
  const std::string hash = inputs_hash(cfg);
  switch (cfg.command) {
    case Command::kKernel:
      cmd_kernel(cfg, hash, out);
      break;
    case Command::kPerimeter:
      cmd_perimeter(cfg, hash, out);
      break;
    case Command::kProfile:
      cmd_profile(cfg, hash, out);
      break;
    case Command::kMinimize:
      cmd_minimize(cfg, hash, out);
      break;
    case Command::kCertify:
      cmd_certify(cfg, hash, out);
      break;
    case Command::kCheck:
      cmd_check(cfg, hash, out);
      break;
  }
  return out;
}

std::string render(const RunConfig& cfg, const Outcome& out) {
  Json report;
  report["tool"] = "nlperim";
  report["command"] = to_string(cfg.command);
  report["seed"] = cfg.seed;
  report["inputs_hash"] = inputs_hash(cfg);
  report["kernel"] = cfg.kernel.effective().id();
  report["grid"] = describe(cfg.grid);
  report["passed"] = out.passed;
  report["records"] = out.records;
  return report.dump(2) + "\n";
}

}  // namespace

std::string inputs_hash(const RunConfig& config) {
  return hex64(fnv1a64(config.canonical + "\nseed=" + std::to_string(config.seed)));
}

std::string render_report(const RunConfig& config, int* exit_code) {
  const Outcome out = execute(config);
  if (exit_code) *exit_code = out.passed ? kExitPass : kExitViolation;
  return render(config, out);
}

int run(const RunConfig& config, std::ostream& log) {
  log << "nlperim " << to_string(config.command) << "  seed " << config.seed << "  inputs "
      << inputs_hash(config) << '\n';
  const Outcome out = execute(config);
  for (const auto& line : out.lines) log << "  " << line << '\n';

  namespace fs = std::filesystem;
  const fs::path dir(config.output);
  fs::create_directories(dir);
  auto write = [&](const fs::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw ConfigError("cannot write " + p.string());
    os << text;
    log << "  wrote " << p.string() << '\n';
  };
  if (config.wants("json")) write(dir / "report.json", render(config, out));
  if (config.wants("csv")) {
    if (!out.profile_csv.empty()) write(dir / "profile.csv", out.profile_csv);
    for (const auto& [stem, field] : out.fields) {
      std::ostringstream os;
      write_csv(os, field);
      write(dir / (stem + ".csv"), os.str());
    }
  }
  if (config.wants("nlpg1")) {
    for (const auto& [stem, field] : out.fields) {
      save_nlpg1((dir / (stem + ".nlpg1")).string(), field);
      log << "  wrote " << (dir / (stem + ".nlpg1")).string() << '\n';
    }
  }
  log << (out.passed ? "PASS" : "FAIL") << '\n';
  return out.passed ? kExitPass : kExitViolation;
}

}  // namespace nlperim
