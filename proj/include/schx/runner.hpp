#pragma once

// Run orchestration: per-sample diagnostic rows (CSV), checkpoints with a
// resume sidecar, dyadic pullback captures, the summary JSON, and the
// FFT-vs-direct oracle check.
//
// Output directory layout:
//   config.yaml         canonical echo of the run config
//   series.csv          one row per diagnostic sample
//   summary.json        drifts, minima, integrals, dyadic verdicts
//   checkpoint.schf     latest state (snapshot format) + checkpoint.json sidecar
//   captures/NNN.schf   free pullbacks at the dyadic capture times
//   psi_plus.schf       candidate scattering state

#include "json.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "schx/config.hpp"
#include "schx/cubes.hpp"
#include "schx/morawetz.hpp"
#include "schx/oracle.hpp"
#include "schx/scattering.hpp"
#include "schx/snapshot.hpp"

namespace schx {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

enum ExitCode : int { exit_ok = 0, exit_invalid = 1, exit_oracle_failed = 2, exit_aborted = 3, exit_error = 4, exit_resume_mismatch = 5 };

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string exponent_label(double r) {
  if (std::isinf(r)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", r);
  return buf;
}

/// Column order: time, masses, energies, L^r norms, V, V_dot, V_ddot, I, I_dot,
/// N_C, R_C, N_HF, cube_sup, then positivity samples, GN ratio, scale, shell fraction.
struct CsvLayout {
  int N = 1;
  std::size_t n_exp = 0;
  std::vector<std::string> names;

  std::size_t mass(int j) const { return 1 + j; }
  std::size_t hamiltonian() const { return 1 + N; }
  std::size_t paper_energy() const { return 2 + N; }
  std::size_t norm(std::size_t e) const { return 3 + N + e; }
  std::size_t col(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return i;
    throw ContractViolation("no CSV column " + name);
  }
};

inline CsvLayout csv_layout(const RunConfig& cfg) {
  CsvLayout l;
  l.N = cfg.params.n_components;
  l.n_exp = cfg.diagnostics.lr_exponents.size();
  l.names.push_back("time");
  for (int j = 0; j < l.N; ++j) l.names.push_back("mass_" + std::to_string(j));
  l.names.push_back("hamiltonian");
  l.names.push_back("paper_energy");
  for (double r : cfg.diagnostics.lr_exponents) l.names.push_back("norm_L" + exponent_label(r));
  for (const char* n : {"V", "V_dot", "V_ddot", "I", "I_dot", "N_C", "R_C", "N_HF", "cube_sup", "min_K",
                        "max_eta_violation", "gn_ratio", "scale", "shell_fraction"})
    l.names.push_back(n);
  return l;
}

/// Everything a row needs that is fixed for the whole run.
struct RowContext {
  const RunConfig* cfg = nullptr;
  CsvLayout layout;
  std::optional<VirialWeight> weight;
  std::optional<CubeFamily> cubes;
  CubeFlavor flavor = CubeFlavor::triple;
  std::vector<IndexPair> pairs;
};

inline RowContext make_row_context(const RunConfig& cfg) {
  RowContext ctx;
  ctx.cfg = &cfg;
  ctx.layout = csv_layout(cfg);
  const auto& dg = cfg.diagnostics;
  const GridSpec& g = cfg.grid;
  if (dg.on(Diagnostic::virial))
    ctx.weight = dg.virial_weight == "smooth"     ? smooth_virial_weight(g)
                 : dg.virial_weight == "periodic" ? periodic_virial_weight(g)
                                                  : abs_virial_weight(g);
  if (dg.on(Diagnostic::cubes) && !cfg.free) {
    ctx.flavor = dg.cube_flavor == "auto" ? default_cube_flavor(g.dim, cfg.params.p) : parse_cube_flavor(dg.cube_flavor);
    ctx.cubes = make_cube_family(g, dg.cube_r, dg.cube_stride);
  }
  if (dg.on(Diagnostic::positivity)) {
    if (g.size() <= kExhaustivePairLimit) ctx.pairs = all_interior_pairs(g);
    else ctx.pairs = sample_interior_pairs(g, dg.pair_samples, derived_seed(cfg.seed, 1u << 20));
  }
  return ctx;
}

inline std::vector<double> compute_row(const SystemState& s, const RowContext& ctx) {
  const auto& l = ctx.layout;
  const auto& dg = ctx.cfg->diagnostics;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> row(l.names.size(), nan);
  auto set = [&](const char* name, double v) { row[l.col(name)] = v; };
  row[0] = s.time;
  for (int j = 0; j < l.N; ++j) row[l.mass(j)] = mass(s, j);
  if (dg.on(Diagnostic::energy)) {
    const auto e = energy(s);
    if (e.hamiltonian) row[l.hamiltonian()] = *e.hamiltonian;
    row[l.paper_energy()] = e.paper_convention;
  }
  if (dg.on(Diagnostic::norms) || dg.on(Diagnostic::decay))
    for (std::size_t e = 0; e < l.n_exp; ++e) row[l.norm(e)] = component_norm_sum(s, dg.lr_exponents[e]);
  if (ctx.weight) {
    set("V", virial(s, *ctx.weight));
    set("V_dot", virial_dot(s, *ctx.weight));
    set("V_ddot", virial_ddot_terms(s, *ctx.weight).sum());
  }
  if (dg.on(Diagnostic::interaction)) {
    set("I", interaction_action(s));
    set("I_dot", interaction_action_dot(s));
  }
  if (dg.on(Diagnostic::nonlinear_terms)) {
    const auto t = nonlinear_terms(s);
    set("N_C", t.N_C);
    set("R_C", t.R_C);
    set("N_HF", t.N_HF);
  }
  if (ctx.cubes) set("cube_sup", cube_statistic(s, *ctx.cubes, ctx.flavor).sup_value);
  if (dg.on(Diagnostic::positivity)) {
    set("min_K", k_kernel_check(s, ctx.pairs));
    set("max_eta_violation", eta_bound_check(s, ctx.pairs));
  }
  if (dg.on(Diagnostic::gn)) set("gn_ratio", gn_ratio(s.fields, dg.gn_r, dg.gn_nu));
  set("scale", problem_scale(s));
  set("shell_fraction", support_monitor(s).shell_fraction);
  return row;
}

inline std::string csv_line(const std::vector<double>& row) {
  std::string out;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out += ',';
    out += format_g17(row[i]);
  }
  return out + "\n";
}

inline std::string csv_header_line(const CsvLayout& l) {
  std::string out;
  for (std::size_t i = 0; i < l.names.size(); ++i) out += (i ? "," : "") + l.names[i];
  return out + "\n";
}

/// Rows of a CSV written by csv_line (header skipped).
inline std::vector<std::vector<double>> read_csv_rows(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot read " + path);
  std::string line;
  std::getline(is, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> r;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) r.push_back(std::strtod(cell.c_str(), nullptr));
    rows.push_back(std::move(r));
  }
  return rows;
}

/// Capture schedule for free pullbacks: dyadic window edges plus interior
/// points of every window, since the last resolvable window is only known
/// after the run (for the candidate-state gap sequence).
struct CaptureSchedule {
  std::vector<double> window_starts;  // T_k, 2 T_k within the planned horizon
  std::vector<double> times;          // sorted capture times
};

inline CaptureSchedule capture_schedule(double base, double horizon) {
  CaptureSchedule c;
  c.window_starts = dyadic_windows(base, horizon);
  if (c.window_starts.empty()) return c;
  std::set<double> t;
  for (double T : c.window_starts)
    for (double f : {1.0, 1.25, 1.5, 1.75, 2.0}) t.insert(f * T);
  c.times.assign(t.begin(), t.end());
  return c;
}

struct RunPlanInfo {
  double t_wrap_estimate = 0.0;
  double window_base = 0.0;
  CaptureSchedule captures;
};

inline RunPlanInfo plan_info(const RunConfig& cfg, const SystemState& initial) {
  RunPlanInfo p;
  p.t_wrap_estimate = wrap_time_estimate(initial);
  const double horizon = std::min(p.t_wrap_estimate, cfg.t_final);
  // five windows up to the estimate, so a shell leak at half of it still leaves four
  p.window_base = cfg.diagnostics.window_base > 0.0 ? cfg.diagnostics.window_base : horizon / 32.0;
  if (p.window_base > 0.0 && (cfg.diagnostics.on(Diagnostic::scattering) || cfg.diagnostics.on(Diagnostic::decay)))
    p.captures = capture_schedule(p.window_base, horizon);
  if (!cfg.diagnostics.on(Diagnostic::scattering)) p.captures.times.clear();
  return p;
}

struct Capture {
  double time = 0.0;
  std::vector<SpectralField> pullback;
};

inline std::string capture_path(const fs::path& out, std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%03zu.schf", k);
  return (out / "captures" / buf).string();
}

namespace detail {

inline json jnum(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json jvec(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(jnum(x));
  return a;
}

/// Trapezoid rule over samples, skipping NaN columns entirely.
inline double trapezoid(const std::vector<std::vector<double>>& rows, std::size_t col, std::size_t upto) {
  double acc = 0.0;
  for (std::size_t i = 1; i < upto; ++i) acc += 0.5 * (rows[i][0] - rows[i - 1][0]) * (rows[i][col] + rows[i - 1][col]);
  return acc;
}

inline bool column_present(const std::vector<std::vector<double>>& rows, std::size_t col) {
  return !rows.empty() && !std::isnan(rows.front()[col]);
}

}  // namespace detail

inline constexpr double kWrapShellFraction = 1e-4;

/// Summary of a (possibly partial) run, a pure function of its rows and captures.
inline json summarize(const RunConfig& cfg, const RunPlanInfo& info, const std::vector<std::vector<double>>& rows,
                      const std::vector<Capture>& captures) {
  using detail::jnum;
  const auto L = csv_layout(cfg);
  const auto& dg = cfg.diagnostics;
  json s;
  s["config_hash"] = [&] {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << config_hash(cfg);
    return os.str();
  }();
  s["samples"] = rows.size();
  s["final_time"] = rows.empty() ? json(nullptr) : jnum(rows.back()[0]);
  if (cfg.free) {
    s["regime"] = "free";
  } else {
    const auto rep = validate(cfg.params, cfg.grid);
    s["regime"] = regime_name(rep.classification);
  }
  json warnings = json::array();
  if (!cfg.free && validate(cfg.params, cfg.grid).classification == Regime::outside_theorem_hypotheses)
    warnings.push_back("parameters lie outside the decay and scattering hypotheses; diagnostics are exploratory");
  for (double r : dg.lr_exponents)
    if (!decay_exponent_in_range(r, cfg.grid.dim))
      warnings.push_back("L^" + exponent_label(r) + " lies outside the decay range for d=" + std::to_string(cfg.grid.dim));

  auto max_rel_drift = [&](std::size_t col) -> json {
    if (!detail::column_present(rows, col)) return nullptr;
    const double ref = rows.front()[col];
    double worst = 0.0;
    for (const auto& r : rows) worst = std::max(worst, std::abs(r[col] - ref) / std::max(std::abs(ref), 1e-300));
    return worst;
  };
  auto min_col = [&](const std::string& name) -> json {
    const std::size_t c = L.col(name);
    if (!detail::column_present(rows, c)) return nullptr;
    double m = std::numeric_limits<double>::infinity();
    for (const auto& r : rows) m = std::min(m, r[c]);
    return jnum(m);
  };
  auto max_col = [&](const std::string& name) -> json {
    const std::size_t c = L.col(name);
    if (!detail::column_present(rows, c)) return nullptr;
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& r : rows) m = std::max(m, r[c]);
    return jnum(m);
  };

  json md = json::array();
  for (int j = 0; j < L.N; ++j) md.push_back(max_rel_drift(L.mass(j)));
  s["mass_drift"] = md;
  s["hamiltonian_drift"] = max_rel_drift(L.hamiltonian());
  s["paper_energy_drift"] = max_rel_drift(L.paper_energy());
  s["min_N_C"] = min_col("N_C");
  s["min_R_C"] = min_col("R_C");
  s["min_N_HF"] = min_col("N_HF");
  s["min_K"] = min_col("min_K");
  s["max_eta_violation"] = max_col("max_eta_violation");
  s["max_scale"] = max_col("scale");
  s["gn_constant"] = max_col("gn_ratio");

  json integrals;
  for (const char* name : {"N_C", "R_C", "N_HF", "cube_sup"}) {
    const std::size_t c = L.col(name);
    integrals[name] = detail::column_present(rows, c) ? jnum(detail::trapezoid(rows, c, rows.size())) : json(nullptr);
  }
  const std::size_t idc = L.col("I_dot");
  if (detail::column_present(rows, idc)) {
    double m = 0.0;
    for (const auto& r : rows) m = std::max(m, std::abs(r[idc]));
    integrals["sup_abs_I_dot"] = m;
  }
  s["morawetz_integrals"] = integrals;

  // pre-wrap horizon: group-velocity estimate from the initial state, cut where
  // the outer shell holds a visible share of the mass (nonlinear acceleration)
  double t_shell = std::numeric_limits<double>::infinity();
  const std::size_t sc = L.col("shell_fraction");
  for (const auto& r : rows)
    if (r[sc] > kWrapShellFraction) {
      t_shell = r[0];
      break;
    }
  const double t_end = rows.empty() ? 0.0 : rows.back()[0];
  const double t_wrap = std::min(info.t_wrap_estimate, t_shell);
  const double horizon = std::min(t_wrap, t_end);
  const auto starts = info.window_base > 0.0 ? dyadic_windows(info.window_base, horizon) : std::vector<double>{};
  json decay;
  decay["t_wrap_estimate"] = jnum(info.t_wrap_estimate);
  decay["t_shell_leak"] = jnum(t_shell);
  decay["window_starts"] = detail::jvec(starts);
  json series = json::array();
  if (dg.on(Diagnostic::decay))
    for (std::size_t e = 0; e < L.n_exp; ++e) {
      DecaySeries ds{dg.lr_exponents[e], {}, {}};
      for (const auto& r : rows) {
        ds.times.push_back(r[0]);
        ds.values.push_back(r[L.norm(e)]);
      }
      const auto rep = decay_window_report(ds, starts);
      json o;
      o["r"] = exponent_label(ds.exponent);
      o["in_decay_range"] = decay_exponent_in_range(ds.exponent, cfg.grid.dim);
      o["window_sups"] = detail::jvec(rep.values);
      o["decreasing_last3"] = rep.decreasing;
      series.push_back(o);
    }
  decay["series"] = series;
  s["decay"] = decay;

  json sc_json;
  if (dg.on(Diagnostic::scattering)) {
    auto at = [&](double T) -> const Capture* {
      // the capture for time T is the first one taken at or after it
      const Capture* best = nullptr;
      for (const auto& c : captures)
        if (c.time >= T - 1e-12 && (!best || c.time < best->time)) best = &c;
      return best;
    };
    std::vector<double> cauchy;
    for (double T : starts) {
      const Capture *a = at(T), *b = at(2.0 * T);
      if (!a || !b) break;
      cauchy.push_back(cauchy_h1(a->pullback, b->pullback));
    }
    sc_json["cauchy_h1"] = detail::jvec(cauchy);
    // three windows, two comparisons
    sc_json["cauchy_decreasing_last3"] = strictly_decreasing_tail(cauchy, 2);
    std::vector<double> gaps;
    if (!starts.empty()) {
      const double last = starts.back();
      if (const Capture* end = at(2.0 * last)) {
        for (double f : {1.0, 1.25, 1.5, 1.75, 2.0})
          if (const Capture* c = at(f * last)) gaps.push_back(cauchy_h1(c->pullback, end->pullback));
        sc_json["candidate_time"] = end->time;
      }
    }
    bool nonincreasing = gaps.size() >= 2;
    for (std::size_t i = 1; i < gaps.size(); ++i) nonincreasing = nonincreasing && gaps[i] <= gaps[i - 1];
    sc_json["free_gap"] = detail::jvec(gaps);
    sc_json["free_gap_nonincreasing"] = nonincreasing;
    if (!cfg.free) {
      try {
        const auto sp = scattering_pairs(cfg.params, cfg.grid.dim);
        sc_json["pair_first"] = {sp.first.q.str(), sp.first.r.str()};
        sc_json["pair_second"] = {sp.second.q.str(), sp.second.r.str()};
      } catch (const ValidationError& e) {
        sc_json["pairs_refused"] = e.what();
      }
    }
  }
  s["scattering"] = sc_json;
  s["warnings"] = warnings;
  return s;
}

struct RunOptions {
  bool resume = false;
  std::function<void(const std::string&)> log = [](const std::string&) {};
};

struct RunResult {
  int exit_code = exit_ok;
  std::string message;
  std::string last_checkpoint;
  json summary;
};

inline void write_text_atomic(const fs::path& p, const std::string& text) {
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot write " + tmp.string());
    os << text;
  }
  fs::rename(tmp, p);
}

/// Runs (or resumes) the configured scenario into cfg.output_dir.
inline RunResult run_scenario(const RunConfig& cfg, const RunOptions& opt = {}) {
  RunResult res;
  const fs::path out = cfg.output_dir;
  fs::create_directories(out / "captures");
  const fs::path csv_path = out / "series.csv", ckpt = out / "checkpoint.schf", side = out / "checkpoint.json";
  const std::uint64_t hash = config_hash(cfg);

  const SystemState initial = initial_state(cfg);
  const RunPlanInfo info = plan_info(cfg, initial);
  const RowContext ctx = make_row_context(cfg);
  const StepPlan plan = cfg.plan;

  SystemState state = initial;
  long long step = 0;
  std::vector<std::vector<double>> rows;
  std::vector<Capture> captures;
  std::ofstream csv;

  if (opt.resume) {
    if (!fs::exists(side) || !fs::exists(ckpt)) {
      res.exit_code = exit_resume_mismatch;
      res.message = "no checkpoint in " + out.string();
      return res;
    }
    std::ifstream is(side);
    const json sj = json::parse(is);
    if (sj.at("config_hash").get<std::uint64_t>() != hash) {
      res.exit_code = exit_resume_mismatch;
      res.message = "checkpoint was written by a different configuration";
      return res;
    }
    step = sj.at("step").get<long long>();
    const auto snap = read_snapshot(ckpt.string());
    if (snap.grid != cfg.grid || static_cast<int>(snap.fields.size()) != cfg.params.n_components) {
      res.exit_code = exit_resume_mismatch;
      res.message = "checkpoint grid or component count differs from the configuration";
      return res;
    }
    state = SystemState{cfg.params, snap.fields, snap.time};
    fs::resize_file(csv_path, sj.at("csv_bytes").get<std::uintmax_t>());
    rows = read_csv_rows(csv_path.string());
    const std::size_t ncap = sj.at("captures").get<std::size_t>();
    for (std::size_t k = 0; k < ncap; ++k) {
      const auto c = read_snapshot(capture_path(out, k));
      captures.push_back(Capture{c.time, c.fields});
    }
    res.last_checkpoint = ckpt.string();
    csv.open(csv_path, std::ios::binary | std::ios::app);
    opt.log("resuming at step " + std::to_string(step) + ", t=" + format_g17(state.time));
  } else {
    write_text_atomic(out / "config.yaml", emit_config(cfg));
    csv.open(csv_path, std::ios::binary | std::ios::trunc);
    csv << csv_header_line(ctx.layout);
    fs::remove(ckpt);
    fs::remove(side);
  }
  if (!csv) throw Error("cannot write " + csv_path.string());

  RunHooks hooks;
  hooks.first_step = step;
  hooks.emit_initial = !opt.resume;
  hooks.sinks.push_back([&](const SystemState& s, long long) {
    rows.push_back(compute_row(s, ctx));
    csv << csv_line(rows.back());
    const auto& times = info.captures.times;
    while (captures.size() < times.size() && s.time >= times[captures.size()] - 1e-12) {
      Capture c{s.time, free_pullback(s)};
      write_snapshot(capture_path(out, captures.size()), c.pullback, c.time);
      captures.push_back(std::move(c));
    }
  });
  hooks.checkpoint_every = cfg.checkpoint_every;
  hooks.checkpoint = [&](const SystemState& s, long long k) {
    csv.flush();
    write_snapshot(ckpt.string() + ".tmp", s.fields, s.time);
    fs::rename(ckpt.string() + ".tmp", ckpt);
    json sj;
    sj["config_hash"] = hash;
    sj["step"] = k;
    sj["time"] = s.time;
    sj["csv_bytes"] = static_cast<std::uintmax_t>(csv.tellp());
    sj["captures"] = captures.size();
    write_text_atomic(side, sj.dump(2) + "\n");
    res.last_checkpoint = ckpt.string();
  };

  std::string status = "completed";
  try {
    state = run(state, plan, cfg.t_final, hooks);
  } catch (const StabilityError& e) {
    status = "aborted";
    res.message = e.what();
  } catch (const NumericalError& e) {
    status = "aborted";
    res.message = e.what();
  }
  csv.close();

  json summary;
  summary["status"] = status;
  if (status != "completed") {
    summary["error"] = res.message;
    summary["last_checkpoint"] = res.last_checkpoint.empty() ? json(nullptr) : json(res.last_checkpoint);
    res.exit_code = exit_aborted;
  }
  summary.update(summarize(cfg, info, rows, captures));
  if (summary["scattering"].contains("candidate_time")) {
    const double tc = summary["scattering"]["candidate_time"].get<double>();
    for (const auto& c : captures)
      if (c.time == tc) write_snapshot((out / "psi_plus.schf").string(), c.pullback, 0.0);
    summary["scattering"]["candidate"] = "psi_plus.schf";
  }
  write_text_atomic(out / "summary.json", summary.dump(2) + "\n");
  res.summary = summary;
  return res;
}

// ---------------------------------------------------------------------------
// Oracle check

struct OracleEntry {
  std::string name;
  double deviation = 0.0;
  double threshold = 0.0;
  bool pass = true;
  bool skipped = false;
};

struct OracleOptions {
  bool corrupt_kernel = false;  // fault injection: perturbs the FFT-path kernel spectrum
  std::size_t triple_sum_limit = 512;
};

inline constexpr double kTransformThreshold = 1e-10;
inline constexpr double kFunctionalThreshold = 1e-8;

inline std::vector<OracleEntry> oracle_check(const RunConfig& cfg, const OracleOptions& opt = {}) {
  const GridSpec& g = cfg.grid;
  if (g.size() > kDirectCostLimit) throw CostGuardError("oracle-check needs n^d <= 4096");
  const SystemState s = initial_state(cfg);
  const auto& dg = cfg.diagnostics;
  const double scale = std::max(problem_scale(s), 1e-300);
  std::vector<OracleEntry> out;
  auto scalar = [&](const std::string& name, double fast, double slow, double thr) {
    const double dev = std::abs(fast - slow) / std::max(std::abs(slow), 1e-12 * scale);
    out.push_back(OracleEntry{name, dev, thr, dev <= thr, false});
  };
  auto fields = [&](const std::string& name, const std::vector<cplx>& fast, const std::vector<cplx>& slow, double thr) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < fast.size(); ++i) {
      num = std::max(num, std::abs(fast[i] - slow[i]));
      den = std::max(den, std::abs(slow[i]));
    }
    const double dev = num / std::max(den, 1e-300);
    out.push_back(OracleEntry{name, dev, thr, dev <= thr, false});
  };

  if (dg.on(Diagnostic::energy)) {
    std::vector<cplx> fast, slow;
    for (const auto& f : s.fields) {
      const auto a = to_spectral(f).values, b = oracle::slow_dft(g, f.values, true);
      fast.insert(fast.end(), a.begin(), a.end());
      slow.insert(slow.end(), b.begin(), b.end());
    }
    fields("transform", fast, slow, kTransformThreshold);

    KernelTable W = *cached_kernel(g, KernelKind::riesz(s.params.gamma1));
    if (opt.corrupt_kernel) {
      W.spectrum[1] *= 1.5;
      W.spectrum[W.spectrum.size() - 1] *= 0.5;
    }
    SpectralField rho(g);
    for (std::size_t i = 0; i < g.size(); ++i) rho.values[i] = std::norm(s.fields[0].values[i]);
    fields("convolve", as_physical(convolve(W, rho)).values, convolve_direct(W, rho).values, kFunctionalThreshold);

    const auto G = nonlinearity(s), Go = oracle::nonlinearity(s);
    fast.clear();
    slow.clear();
    for (int j = 0; j < s.size(); ++j) {
      const auto a = as_physical(G[j]).values;
      fast.insert(fast.end(), a.begin(), a.end());
      slow.insert(slow.end(), Go[j].values.begin(), Go[j].values.end());
    }
    fields("nonlinearity", fast, slow, kFunctionalThreshold);

    const auto e = energy(s);
    const auto eo = oracle::energy_terms(s);
    scalar("kinetic_energy", e.kinetic, eo.kinetic, kFunctionalThreshold);
    scalar("choquard_energy", e.choquard, eo.choquard, kFunctionalThreshold);
    scalar("hf_energy", e.hartree_fock, eo.hartree_fock, kFunctionalThreshold);
    const double hf = 0.5 * s.params.beta;
    scalar("paper_energy", e.paper_convention,
           eo.kinetic + eo.choquard / (2.0 * s.params.p) + hf * eo.hartree_fock, kFunctionalThreshold);
    if (e.hamiltonian)
      scalar("hamiltonian", *e.hamiltonian, eo.kinetic + eo.choquard / s.params.p + hf * eo.hartree_fock,
             kFunctionalThreshold);
  }
  if (dg.on(Diagnostic::interaction)) {
    scalar("interaction_action", interaction_action(s), oracle::interaction_action(s), kFunctionalThreshold);
    scalar("interaction_action_dot", interaction_action_dot(s), oracle::interaction_action_dot(s), kFunctionalThreshold);
  }
  if (dg.on(Diagnostic::nonlinear_terms)) {
    if (g.size() > opt.triple_sum_limit) {
      for (const char* n : {"N_C", "R_C", "N_HF"}) out.push_back(OracleEntry{n, 0.0, kFunctionalThreshold, true, true});
    } else {
      const auto t = nonlinear_terms(s);
      const auto o = oracle::nonlinear_terms(s);
      scalar("N_C", t.N_C, o[0], kFunctionalThreshold);
      scalar("R_C", t.R_C, o[1], kFunctionalThreshold);
      scalar("N_HF", t.N_HF, o[2], kFunctionalThreshold);
    }
  }
  return out;
}

}  // namespace schx
