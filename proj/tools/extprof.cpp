// Command-line front end for the extinction-profile solvers.
//
// Subcommands: classify, threshold, profile, psi, selfsim, sweep, validate.
// Output goes to stdout or --out as CSV/JSON; every emitted record embeds
// the run configuration, numbers carry 17 significant digits, and identical
// configurations produce byte-identical output. Exit codes: 0 success,
// 1 numerical failure, 2 usage error.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "extprof/asymptotics.hpp"
#include "extprof/classify.hpp"
#include "extprof/errors.hpp"
#include "extprof/io.hpp"
#include "extprof/profile.hpp"
#include "extprof/psi.hpp"
#include "extprof/validate.hpp"

namespace {

using namespace extprof;

struct CommonFlags {
  double p = 0.0;
  double rel_tol = 0.0;  // 0 keeps the module default
  double abs_tol = -1.0;  // negative keeps the module default
  std::string format = "csv";
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--p", flags.p, "diffusion exponent, in (1, 2)")->required();
  cmd->add_option("--rel-tol", flags.rel_tol, "relative step tolerance override");
  cmd->add_option("--abs-tol", flags.abs_tol, "absolute step tolerance override");
  cmd->add_option("--format", flags.format, "output format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--out", flags.out, "output file (default: stdout)");
}

void apply_ctrl(const CommonFlags& flags, StepControl& ctrl) {
  if (flags.rel_tol > 0.0) ctrl.rel_tol = flags.rel_tol;
  if (flags.abs_tol >= 0.0) ctrl.abs_tol = flags.abs_tol;
}

void push(std::vector<std::pair<std::string, std::string>>& config, const std::string& key,
          const std::string& value) {
  config.emplace_back(key, value);
}

void push(std::vector<std::pair<std::string, std::string>>& config, const std::string& key,
          double value) {
  config.emplace_back(key, format_double(value));
}

void echo_ctrl(OutputRecord& record, const StepControl& ctrl) {
  push(record.config, "rel_tol", ctrl.rel_tol);
  push(record.config, "abs_tol", ctrl.abs_tol);
}

/// Writes the record to --out or stdout in the chosen format.
void deliver(const OutputRecord& record, const CommonFlags& flags) {
  const std::string text = flags.format == "json" ? emit_json(record) : emit_csv(record);
  if (flags.out.empty()) {
    std::fwrite(text.data(), 1, text.size(), stdout);
  } else {
    write_text_file(flags.out, text);
  }
}

int run_classify(const CommonFlags& flags, double a, double margin) {
  const Params params = Params::make(flags.p);
  ClassifyOptions opts;
  opts.margin = margin;
  apply_ctrl(flags, opts.ctrl);
  const ClassLabel label = classify(params, a, opts);
  std::printf("%s\n", to_string(label.regime));
  if (!flags.out.empty()) {
    OutputRecord record;
    push(record.config, "command", "classify");
    push(record.config, "p", flags.p);
    push(record.config, "a", a);
    push(record.config, "margin", margin);
    echo_ctrl(record, opts.ctrl);
    record.scalars.emplace_back("regime", Cell{std::string(to_string(label.regime))});
    record.scalars.emplace_back("phi_at_decision", Cell{label.evidence.phi_at_decision});
    record.scalars.emplace_back("y_decided", Cell{label.evidence.y_decided});
    record.scalars.emplace_back("margin_used", Cell{label.evidence.margin_used});
    record.diagnostics.emplace_back("via_event", label.evidence.via_event ? 1.0 : 0.0);
    record.diagnostics.emplace_back("hit_floor", label.evidence.hit_floor ? 1.0 : 0.0);
    record.diagnostics.emplace_back("nodes", static_cast<double>(label.evidence.nodes));
    deliver(record, flags);
  }
  return 0;
}

int run_threshold(const CommonFlags& flags, double tol_a) {
  const Params params = Params::make(flags.p);
  ThresholdOptions opts;
  opts.tol_a = tol_a;
  apply_ctrl(flags, opts.ctrl);
  const ThresholdResult res = find_threshold(params, opts);
  OutputRecord record;
  push(record.config, "command", "threshold");
  push(record.config, "p", flags.p);
  push(record.config, "tol_a", tol_a);
  echo_ctrl(record, opts.ctrl);
  record.scalars.emplace_back("a_lo", Cell{res.a_lo});
  record.scalars.emplace_back("a_hi", Cell{res.a_hi});
  record.scalars.emplace_back("a_star", Cell{res.a_star});
  record.scalars.emplace_back("width", Cell{res.width});
  record.scalars.emplace_back("iterations", Cell{static_cast<double>(res.iterations)});
  record.diagnostics.emplace_back("probes", static_cast<double>(res.log.size()));
  deliver(record, flags);
  return 0;
}

int run_profile(const CommonFlags& flags, double a, double r_max) {
  const Params params = Params::make(flags.p);
  StepControl ctrl = default_profile_control();
  apply_ctrl(flags, ctrl);
  const ProfileTrajectory traj = integrate_profile(params, a, r_max, ctrl);
  const ResidualReport res = check_residuals(traj);
  OutputRecord record;
  push(record.config, "command", "profile");
  push(record.config, "p", flags.p);
  push(record.config, "a", a);
  push(record.config, "r_max", r_max);
  echo_ctrl(record, ctrl);
  if (traj.crossing) {
    record.scalars.emplace_back("r_cross", Cell{traj.crossing->radius});
    record.scalars.emplace_back("slope_at_cross", Cell{traj.crossing->slope});
  }
  record.diagnostics.emplace_back("max_ode_residual", res.max_ode_residual);
  record.diagnostics.emplace_back("max_identity_defect", res.max_identity_defect);
  record.columns = {"r", "f", "fprime"};
  for (std::size_t i = 0; i < traj.path.size(); ++i) {
    const double r = traj.path.time(i);
    record.rows.push_back({Cell{r}, Cell{traj.path.state(i, 0)}, Cell{traj.fprime(r)}});
  }
  deliver(record, flags);
  return 0;
}

int run_psi(const CommonFlags& flags, double a, double y_end) {
  const Params params = Params::make(flags.p);
  PsiOptions opts;
  opts.y_end = y_end;
  apply_ctrl(flags, opts.ctrl);
  const PsiTrajectory traj = integrate_psi(params, a, opts);
  OutputRecord record;
  push(record.config, "command", "psi");
  push(record.config, "p", flags.p);
  push(record.config, "a", a);
  push(record.config, "y_end", y_end);
  echo_ctrl(record, opts.ctrl);
  if (traj.y_peak) record.scalars.emplace_back("y_peak", Cell{*traj.y_peak});
  record.diagnostics.emplace_back("hit_floor", traj.hit_floor ? 1.0 : 0.0);
  record.diagnostics.emplace_back("floor_used", traj.floor_used);
  record.columns = {"y", "psi", "phi"};
  for (std::size_t i = 0; i < traj.path.size(); ++i) {
    const double y = traj.path.time(i);
    const double psi = traj.path.state(i, 0);
    const double phi = psi * std::pow(1.0 - y, -params.p);
    record.rows.push_back({Cell{y}, Cell{psi}, Cell{phi}});
  }
  deliver(record, flags);
  return 0;
}

int run_selfsim(const CommonFlags& flags, double a, double big_t, double t, double x_max,
                int nx) {
  const Params params = Params::make(flags.p);
  StepControl ctrl = default_profile_control();
  apply_ctrl(flags, ctrl);
  const ProfileTrajectory traj = integrate_profile(params, a, std::max(x_max, 1.0), ctrl);
  // Symmetric grid by mirrored construction, so evenness is exact.
  const int half = std::max(1, nx / 2);
  std::vector<double> xs;
  for (int i = -half; i <= half; ++i) {
    xs.push_back(x_max * static_cast<double>(i) / static_cast<double>(half));
  }
  const SelfSimilarSlice slice = reconstruct_selfsimilar(traj, big_t, t, xs);
  OutputRecord record;
  push(record.config, "command", "selfsim");
  push(record.config, "p", flags.p);
  push(record.config, "a", a);
  push(record.config, "T", big_t);
  push(record.config, "t", t);
  push(record.config, "x_max", x_max);
  push(record.config, "nx", static_cast<double>(xs.size()));
  echo_ctrl(record, ctrl);
  record.columns = {"x", "u"};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    record.rows.push_back({Cell{slice.x[i]}, Cell{slice.u[i]}});
  }
  deliver(record, flags);
  return 0;
}

unsigned sweep_threads(std::size_t points) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* cap = std::getenv("EXTPROF_THREADS")) {
    char* end = nullptr;
    const unsigned long parsed = std::strtoul(cap, &end, 10);
    if (end != cap && parsed > 0) n = std::min<unsigned long>(n, parsed);
  }
  return static_cast<unsigned>(std::min<std::size_t>(n, points));
}

struct SweepCell {
  std::string regime_text;  // empty while classification is pending or failed
  std::optional<CrossingFit> crossing;
  std::optional<CriticalFit> critical;
  std::optional<DecayingFit> decaying;
  std::string status = "ok";
};

SweepCell sweep_point(const Params& params, double a, double r_cap, const CommonFlags& flags) {
  SweepCell cell;
  ClassifyOptions copts;
  apply_ctrl(flags, copts.ctrl);
  const ClassLabel label = classify(params, a, copts);
  cell.regime_text = to_string(label.regime);
  try {
    StepControl ctrl = default_profile_control();
    apply_ctrl(flags, ctrl);
    switch (label.regime) {
      case Regime::crossing: {
        const ProfileTrajectory traj = integrate_profile(params, a, 100.0, ctrl);
        cell.crossing = std::get<CrossingFit>(fit_tail(traj, label).fit);
        break;
      }
      case Regime::decaying: {
        ctrl.abs_tol = 0.0;
        ctrl.h_max = 3.0;
        ctrl.max_steps = 6000000;
        const double r_max = std::clamp(suggested_tail_radius(params, a), 2e4, r_cap);
        const ProfileTrajectory traj = integrate_profile(params, a, r_max, ctrl);
        cell.decaying = std::get<DecayingFit>(fit_tail(traj, label).fit);
        break;
      }
      case Regime::critical: {
        ctrl.abs_tol = 0.0;
        const ProfileTrajectory traj = integrate_profile(params, a, 40.0, ctrl);
        cell.critical = std::get<CriticalFit>(fit_tail(traj, label).fit);
        break;
      }
    }
  } catch (const SolverError& e) {
    cell.status = e.what();
  }
  return cell;
}

int run_sweep(const CommonFlags& flags, double a_min, double a_max, int n, double r_cap) {
  const Params params = Params::make(flags.p);
  if (a_min <= 0.0 || a_max <= 0.0) {
    // Default grid brackets the threshold with a decade of headroom.
    ClassifyOptions copts;
    apply_ctrl(flags, copts.ctrl);
    const Bracket br = initial_bracket(params, copts);
    if (a_min <= 0.0) a_min = br.a_lo / 10.0;
    if (a_max <= 0.0) a_max = 10.0 * br.a_hi;
  }
  if (!(a_min < a_max)) throw std::invalid_argument("sweep: need a_min < a_max");
  if (n < 2) throw std::invalid_argument("sweep: need at least 2 grid points");

  std::vector<double> as(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / (n - 1);
    as[static_cast<std::size_t>(i)] = a_min * std::pow(a_max / a_min, t);
  }
  std::vector<SweepCell> cells(as.size());
  // Independent pure evaluations; results land in index order, so the
  // emitted table does not depend on the thread count.
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < as.size(); i = next.fetch_add(1)) {
      try {
        cells[i] = sweep_point(params, as[i], r_cap, flags);
      } catch (const std::exception& e) {
        cells[i].status = e.what();
      }
    }
  };
  const unsigned threads = sweep_threads(as.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }

  OutputRecord record;
  push(record.config, "command", "sweep");
  push(record.config, "p", flags.p);
  push(record.config, "a_min", a_min);
  push(record.config, "a_max", a_max);
  push(record.config, "n", static_cast<double>(n));
  push(record.config, "r_cap", r_cap);
  record.columns = {"a",         "regime",        "r_cross",  "slope",
                    "ell_star",  "tail_constant", "tail_gap", "status"};
  const Cell blank{std::string()};
  for (std::size_t i = 0; i < as.size(); ++i) {
    const SweepCell& cell = cells[i];
    std::vector<Cell> row{Cell{as[i]}, Cell{cell.regime_text},
                          blank,       blank,
                          blank,       blank,
                          blank,       Cell{cell.status}};
    if (cell.crossing) {
      row[2] = Cell{cell.crossing->radius};
      row[3] = Cell{cell.crossing->slope};
    } else if (cell.critical) {
      row[4] = Cell{cell.critical->ell_star};
    } else if (cell.decaying) {
      row[5] = Cell{cell.decaying->constant_estimate};
      row[6] = Cell{cell.decaying->relative_gap};
    }
    record.rows.push_back(std::move(row));
  }
  deliver(record, flags);
  return 0;
}

int run_validate(const CommonFlags& flags, std::vector<double> ps) {
  const ValidationReport report = ps.empty() ? run_validation() : run_validation(ps);
  std::size_t failed = 0;
  for (const CheckResult& c : report.checks) {
    if (!c.passed) ++failed;
    std::printf("[%s] %-46s %14.6g vs %-12.6g %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                c.value, c.threshold, c.detail.c_str());
  }
  std::printf("%zu checks, %zu failed\n", report.checks.size(), failed);
  if (!flags.out.empty()) {
    OutputRecord record;
    push(record.config, "command", "validate");
    record.columns = {"check", "passed", "value", "threshold", "detail"};
    for (const CheckResult& c : report.checks) {
      record.rows.push_back({Cell{c.name}, Cell{c.passed ? 1.0 : 0.0}, Cell{c.value},
                             Cell{c.threshold}, Cell{c.detail}});
    }
    // The value column may legitimately carry NaN for errored checks; strip
    // non-finite entries down to text so emission stays well defined.
    for (auto& row : record.rows) {
      if (const double* x = std::get_if<double>(&row[2]); x && !std::isfinite(*x)) {
        row[2] = Cell{std::string("error")};
      }
    }
    deliver(record, flags);
  }
  return report.all_passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"extinction-profile solver: classify shooting parameters, locate the critical "
               "threshold, emit profiles, psi-plane runs, self-similar slices, and sweeps"};
  app.require_subcommand(1);

  CommonFlags flags;
  double a = 0.0;
  double margin = 1e-4;
  double tol_a = 0.0;
  double r_max = 100.0;
  double y_end = 1.0 - 1e-6;
  double big_t = 1.0;
  double t = 0.0;
  double x_max = 5.0;
  int nx = 101;
  double a_min = 0.0;
  double a_max = 0.0;
  int n = 50;
  double r_cap = 1e6;
  std::vector<double> ps;

  CLI::App* c_classify = app.add_subcommand("classify", "label a as Crossing/Critical/Decaying");
  add_common(c_classify, flags);
  c_classify->add_option("--a", a, "shooting parameter f(0)")->required();
  c_classify->add_option("--margin", margin, "indistinguishable band half-width");

  CLI::App* c_threshold = app.add_subcommand("threshold", "bisect for the critical a*");
  add_common(c_threshold, flags);
  c_threshold->add_option("--tol-a", tol_a, "bracket width to certify (0: 1e-10 * max(1, a_hi))");

  CLI::App* c_profile = app.add_subcommand("profile", "integrate f(r) and emit the trajectory");
  add_common(c_profile, flags);
  c_profile->add_option("--a", a, "shooting parameter f(0)")->required();
  c_profile->add_option("--r-max", r_max, "integration radius");

  CLI::App* c_psi = app.add_subcommand("psi", "integrate the transformed plane and emit psi/phi");
  add_common(c_psi, flags);
  c_psi->add_option("--a", a, "shooting parameter")->required();
  c_psi->add_option("--y-end", y_end, "final ordinate, in (0, 1)");

  CLI::App* c_selfsim = app.add_subcommand("selfsim", "evaluate the separable solution slice");
  add_common(c_selfsim, flags);
  c_selfsim->add_option("--a", a, "shooting parameter")->required();
  c_selfsim->add_option("--T", big_t, "extinction time");
  c_selfsim->add_option("--t", t, "evaluation time in [0, T]");
  c_selfsim->add_option("--x-max", x_max, "grid half-width");
  c_selfsim->add_option("--nx", nx, "grid point count (rounded to odd)");

  CLI::App* c_sweep = app.add_subcommand("sweep", "classify and fit a logarithmic a-grid");
  add_common(c_sweep, flags);
  c_sweep->add_option("--a-min", a_min, "grid start (0: bracket/10)");
  c_sweep->add_option("--a-max", a_max, "grid end (0: 10*bracket)");
  c_sweep->add_option("--n", n, "grid point count");
  c_sweep->add_option("--r-cap", r_cap, "radius budget for decaying tail fits");

  CLI::App* c_validate = app.add_subcommand("validate", "run the structural check suite");
  c_validate->add_option("--p", ps, "exponents to check (default: 1.2 1.5 1.8)");
  c_validate->add_option("--format", flags.format, "output format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  c_validate->add_option("--out", flags.out, "also write the table to a file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(c_classify)) return run_classify(flags, a, margin);
    if (app.got_subcommand(c_threshold)) return run_threshold(flags, tol_a);
    if (app.got_subcommand(c_profile)) return run_profile(flags, a, r_max);
    if (app.got_subcommand(c_psi)) return run_psi(flags, a, y_end);
    if (app.got_subcommand(c_selfsim)) return run_selfsim(flags, a, big_t, t, x_max, nx);
    if (app.got_subcommand(c_sweep)) return run_sweep(flags, a_min, a_max, n, r_cap);
    if (app.got_subcommand(c_validate)) return run_validate(flags, ps);
  } catch (const SolverError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
