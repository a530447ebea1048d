#pragma once

// Run configuration: YAML schema, validation collecting every violation,
// canonical echo, and initial data synthesis.
//
//   grid:        {d, n, L}
//   params:      {N, p, gamma1, gamma2, lambda (scalar or N x N), beta, exploratory, free}
//   initial:     {gaussians: [{component, center, width, velocity, amplitude}],
//                 random:    [{component, max_mode, decay, envelope, center, l2_norm, seed}]}
//   plan:        {dt, scheme (exact_phase | rk4), steps_per_diagnostic, t_final,
//                 stability_guard, checkpoint_every}
//   diagnostics: {enabled: [...], lr_exponents, window_base, virial_weight,
//                 cube_r, cube_stride, cube_flavor, pair_samples, gn_r, gn_nu}
//   output:      {dir}
//   seed:        u64

#include <yaml-cpp/yaml.h>

#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "schx/cubes.hpp"
#include "schx/integrator.hpp"
#include "schx/random_field.hpp"

namespace schx {

enum class Diagnostic { energy, norms, virial, interaction, nonlinear_terms, positivity, cubes, decay, scattering, gn };

inline const std::vector<std::pair<Diagnostic, std::string>>& diagnostic_names() {
  static const std::vector<std::pair<Diagnostic, std::string>> names{
      {Diagnostic::energy, "energy"},         {Diagnostic::norms, "norms"},
      {Diagnostic::virial, "virial"},         {Diagnostic::interaction, "interaction"},
      {Diagnostic::nonlinear_terms, "nonlinear_terms"}, {Diagnostic::positivity, "positivity"},
      {Diagnostic::cubes, "cubes"},           {Diagnostic::decay, "decay"},
      {Diagnostic::scattering, "scattering"}, {Diagnostic::gn, "gn"}};
  return names;
}

inline std::string diagnostic_name(Diagnostic d) {
  for (const auto& [k, v] : diagnostic_names())
    if (k == d) return v;
  return "?";
}

inline std::optional<Diagnostic> parse_diagnostic(const std::string& s) {
  for (const auto& [k, v] : diagnostic_names())
    if (v == s) return k;
  return std::nullopt;
}

struct GaussianSpec {
  int component = 0;
  std::array<double, 3> center{0.0, 0.0, 0.0};
  double width = 1.0;
  std::array<double, 3> velocity{0.0, 0.0, 0.0};
  double amplitude = 1.0;
};

struct RandomSpec {
  int component = 0;
  RandomFieldSpec spec;
  bool seed_given = false;
};

struct DiagnosticsConfig {
  std::set<Diagnostic> enabled;
  std::vector<double> lr_exponents{4.0, 10.0 / 3.0};
  double window_base = 0.0;  // 0: derived from the pre-wrap horizon
  std::string virial_weight = "abs";
  double cube_r = 1.0;
  std::size_t cube_stride = 0;
  std::string cube_flavor = "auto";
  std::size_t pair_samples = 10000;
  double gn_r = 1.0;
  double gn_nu = 2.0;

  bool on(Diagnostic d) const { return enabled.count(d) > 0; }
};

struct RunConfig {
  GridSpec grid{1, 256, 32.0};
  CouplingParams params;
  bool free = false;  // linear flow: couplings forced to zero, coupling constraints skipped
  std::vector<GaussianSpec> gaussians;
  std::vector<RandomSpec> randoms;
  StepPlan plan{1e-3, SubstepScheme::frozen_potential_exact_phase, 10, 0.5};
  double t_final = 1.0;
  long long checkpoint_every = 0;
  DiagnosticsConfig diagnostics;
  std::string output_dir = "out";
  std::uint64_t seed = 1;
};

inline std::set<Diagnostic> all_diagnostics() {
  std::set<Diagnostic> s;
  for (const auto& [k, v] : diagnostic_names()) s.insert(k);
  return s;
}

/// Random-field seed for entry i when the config gives none.
inline std::uint64_t derived_seed(std::uint64_t seed, std::size_t i) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (i + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

namespace detail {

inline std::string where(const YAML::Node& n) {
  const auto m = n.Mark();
  if (m.is_null()) return "";
  return " (line " + std::to_string(m.line + 1) + ", column " + std::to_string(m.column + 1) + ")";
}

/// Accepts plain numbers, "inf" and "a/b".
inline std::optional<double> scalar_number(const YAML::Node& n) {
  if (!n.IsScalar()) return std::nullopt;
  const std::string s = n.Scalar();
  if (s == "inf" || s == ".inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  if (const auto slash = s.find('/'); slash != std::string::npos) {
    try {
      std::size_t u = 0, v = 0;
      const double a = std::stod(s.substr(0, slash), &u), b = std::stod(s.substr(slash + 1), &v);
      if (u == slash && v == s.size() - slash - 1 && b != 0.0) return a / b;
    } catch (const std::exception&) {
    }
    return std::nullopt;
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

class Reader {
 public:
  std::vector<std::string> errors;

  void keys(const YAML::Node& n, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!n.IsMap()) {
      errors.push_back(path + ": expected a mapping" + where(n));
      return;
    }
    for (const auto& kv : n) {
      const std::string k = kv.first.as<std::string>();
      bool ok = false;
      for (const char* a : allowed) ok = ok || k == a;
      if (!ok) errors.push_back(path + "." + k + ": unknown key" + where(kv.first));
    }
  }

  void number(const YAML::Node& parent, const char* key, const std::string& path, double& out) {
    const YAML::Node n = parent[key];
    if (!n) return;
    if (auto v = scalar_number(n)) out = *v;
    else errors.push_back(path + "." + key + ": expected a number" + where(n));
  }

  template <class Int>
  void integer(const YAML::Node& parent, const char* key, const std::string& path, Int& out) {
    const YAML::Node n = parent[key];
    if (!n) return;
    try {
      if (!n.IsScalar()) throw YAML::Exception(n.Mark(), "not a scalar");
      out = n.as<Int>();
    } catch (const YAML::Exception&) {
      errors.push_back(path + "." + key + ": expected an integer" + where(n));
    }
  }

  void boolean(const YAML::Node& parent, const char* key, const std::string& path, bool& out) {
    const YAML::Node n = parent[key];
    if (!n) return;
    try {
      out = n.as<bool>();
    } catch (const YAML::Exception&) {
      errors.push_back(path + "." + key + ": expected true or false" + where(n));
    }
  }

  void string(const YAML::Node& parent, const char* key, const std::string& path, std::string& out) {
    const YAML::Node n = parent[key];
    if (!n) return;
    if (n.IsScalar()) out = n.Scalar();
    else errors.push_back(path + "." + key + ": expected a string" + where(n));
  }

  void vec3(const YAML::Node& parent, const char* key, const std::string& path, std::array<double, 3>& out, int d) {
    const YAML::Node n = parent[key];
    if (!n) return;
    if (n.IsScalar() && d == 1) {
      if (auto v = scalar_number(n)) out[0] = *v;
      else errors.push_back(path + "." + key + ": expected a number" + where(n));
      return;
    }
    if (!n.IsSequence() || static_cast<int>(n.size()) != d) {
      errors.push_back(path + "." + key + ": expected a list of d=" + std::to_string(d) + " numbers" + where(n));
      return;
    }
    for (int a = 0; a < d; ++a) {
      if (auto v = scalar_number(n[a])) out[a] = *v;
      else errors.push_back(path + "." + key + "[" + std::to_string(a) + "]: expected a number" + where(n[a]));
    }
  }
};

}  // namespace detail

/// Parses and validates; every problem is collected into one ValidationError.
inline RunConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ValidationError({"syntax error at line " + std::to_string(e.mark.line + 1) + ", column " +
                           std::to_string(e.mark.column + 1) + ": " + e.msg});
  }
  RunConfig cfg;
  detail::Reader rd;
  if (!root || root.IsNull()) throw ValidationError({"empty configuration"});
  rd.keys(root, "config", {"grid", "params", "initial", "plan", "diagnostics", "output", "seed"});
  if (!rd.errors.empty() && !root.IsMap()) throw ValidationError(rd.errors);

  if (const auto g = root["grid"]) {
    rd.keys(g, "grid", {"d", "n", "L"});
    rd.integer(g, "d", "grid", cfg.grid.dim);
    rd.integer(g, "n", "grid", cfg.grid.n);
    rd.number(g, "L", "grid", cfg.grid.half_length);
  } else {
    rd.errors.push_back("grid: section missing");
  }
  bool grid_ok = true;
  try {
    cfg.grid.validate();
  } catch (const DomainError& e) {
    rd.errors.push_back(std::string("grid: ") + e.what());
    grid_ok = false;
  }
  const int d = grid_ok ? cfg.grid.dim : 1;

  auto& c = cfg.params;
  if (const auto p = root["params"]) {
    rd.keys(p, "params", {"N", "p", "gamma1", "gamma2", "lambda", "beta", "exploratory", "free"});
    rd.integer(p, "N", "params", c.n_components);
    rd.number(p, "p", "params", c.p);
    rd.number(p, "gamma1", "params", c.gamma1);
    rd.number(p, "gamma2", "params", c.gamma2);
    rd.number(p, "beta", "params", c.beta);
    rd.boolean(p, "exploratory", "params", c.exploratory);
    rd.boolean(p, "free", "params", cfg.free);
    const int N = std::max(1, c.n_components);
    c.lambda.assign(N, std::vector<double>(N, 0.0));
    for (int j = 0; j < N; ++j) c.lambda[j][j] = 1.0;
    if (const auto l = p["lambda"]) {
      if (auto v = detail::scalar_number(l)) {
        for (auto& row : c.lambda) std::fill(row.begin(), row.end(), 0.0);
        for (int j = 0; j < N; ++j) c.lambda[j][j] = *v;
      } else if (l.IsSequence()) {
        c.lambda.assign(l.size(), {});
        for (std::size_t j = 0; j < l.size(); ++j) {
          if (!l[j].IsSequence()) {
            rd.errors.push_back("params.lambda[" + std::to_string(j) + "]: expected a list" + detail::where(l[j]));
            continue;
          }
          for (std::size_t k = 0; k < l[j].size(); ++k) {
            if (auto v = detail::scalar_number(l[j][k])) c.lambda[j].push_back(*v);
            else rd.errors.push_back("params.lambda[" + std::to_string(j) + "][" + std::to_string(k) + "]: expected a number" + detail::where(l[j][k]));
          }
        }
      } else {
        rd.errors.push_back("params.lambda: expected a number or an N x N list" + detail::where(l));
      }
    }
  } else {
    rd.errors.push_back("params: section missing");
  }
  if (cfg.free) {
    c.lambda.assign(std::max(1, c.n_components), std::vector<double>(std::max(1, c.n_components), 0.0));
    c.beta = 0.0;
    if (c.n_components < 1) rd.errors.push_back("N >= 1 (got " + std::to_string(c.n_components) + ")");
  } else if (grid_ok) {
    try {
      validate(c, cfg.grid);
    } catch (const ValidationError& e) {
      for (const auto& v : e.violations()) rd.errors.push_back("params: " + v);
    }
  }
  const int N = c.n_components;

  std::vector<int> sources(std::max(0, N), 0);
  auto component = [&](const YAML::Node& e, const std::string& path, int& out) {
    rd.integer(e, "component", path, out);
    if (out < 0 || out >= N) rd.errors.push_back(path + ".component: must lie in [0, N) (got " + std::to_string(out) + ")");
    else ++sources[out];
  };
  if (const auto ini = root["initial"]) {
    rd.keys(ini, "initial", {"gaussians", "random"});
    if (const auto gs = ini["gaussians"]) {
      if (!gs.IsSequence()) rd.errors.push_back("initial.gaussians: expected a list" + detail::where(gs));
      for (std::size_t i = 0; gs.IsSequence() && i < gs.size(); ++i) {
        const std::string path = "initial.gaussians[" + std::to_string(i) + "]";
        const auto e = gs[i];
        rd.keys(e, path, {"component", "center", "width", "velocity", "amplitude"});
        if (!e.IsMap()) continue;
        GaussianSpec s;
        component(e, path, s.component);
        rd.vec3(e, "center", path, s.center, d);
        rd.vec3(e, "velocity", path, s.velocity, d);
        rd.number(e, "width", path, s.width);
        rd.number(e, "amplitude", path, s.amplitude);
        if (!(s.width > 0.0)) rd.errors.push_back(path + ".width: must be > 0");
        cfg.gaussians.push_back(s);
      }
    }
    if (const auto rs = ini["random"]) {
      if (!rs.IsSequence()) rd.errors.push_back("initial.random: expected a list" + detail::where(rs));
      for (std::size_t i = 0; rs.IsSequence() && i < rs.size(); ++i) {
        const std::string path = "initial.random[" + std::to_string(i) + "]";
        const auto e = rs[i];
        rd.keys(e, path, {"component", "max_mode", "decay", "envelope", "center", "l2_norm", "seed"});
        if (!e.IsMap()) continue;
        RandomSpec s;
        component(e, path, s.component);
        rd.integer(e, "max_mode", path, s.spec.max_mode);
        rd.number(e, "decay", path, s.spec.decay);
        rd.number(e, "envelope", path, s.spec.envelope);
        rd.vec3(e, "center", path, s.spec.center, d);
        rd.number(e, "l2_norm", path, s.spec.l2_norm);
        if (e["seed"]) {
          rd.integer(e, "seed", path, s.spec.seed);
          s.seed_given = true;
        }
        if (grid_ok && (s.spec.max_mode < 0 || 2 * s.spec.max_mode >= static_cast<int>(cfg.grid.n)))
          rd.errors.push_back(path + ".max_mode: must lie in [0, n/2)");
        cfg.randoms.push_back(s);
      }
    }
  }
  for (int j = 0; j < N; ++j)
    if (sources[j] == 0) rd.errors.push_back("initial: component " + std::to_string(j) + " has no data (initial data must be nonzero)");

  if (const auto pl = root["plan"]) {
    rd.keys(pl, "plan", {"dt", "scheme", "steps_per_diagnostic", "t_final", "stability_guard", "checkpoint_every"});
    rd.number(pl, "dt", "plan", cfg.plan.dt);
    rd.number(pl, "t_final", "plan", cfg.t_final);
    rd.number(pl, "stability_guard", "plan", cfg.plan.stability_guard);
    rd.integer(pl, "steps_per_diagnostic", "plan", cfg.plan.steps_per_diagnostic);
    rd.integer(pl, "checkpoint_every", "plan", cfg.checkpoint_every);
    std::string scheme = "exact_phase";
    rd.string(pl, "scheme", "plan", scheme);
    if (scheme == "exact_phase" || scheme == "frozen_potential_exact_phase")
      cfg.plan.scheme = SubstepScheme::frozen_potential_exact_phase;
    else if (scheme == "rk4" || scheme == "rk4_nonlinear")
      cfg.plan.scheme = SubstepScheme::rk4_nonlinear;
    else
      rd.errors.push_back("plan.scheme: expected exact_phase or rk4 (got '" + scheme + "')" + detail::where(pl["scheme"]));
  }
  if (!(cfg.plan.dt > 0.0) || !std::isfinite(cfg.plan.dt)) rd.errors.push_back("plan.dt: must be > 0");
  if (!(cfg.t_final >= 0.0) || !std::isfinite(cfg.t_final)) rd.errors.push_back("plan.t_final: must be >= 0");
  if (cfg.plan.steps_per_diagnostic < 1) rd.errors.push_back("plan.steps_per_diagnostic: must be >= 1");
  if (cfg.checkpoint_every < 0) rd.errors.push_back("plan.checkpoint_every: must be >= 0");
  if (!(cfg.plan.stability_guard > 0.0)) rd.errors.push_back("plan.stability_guard: must be > 0");
  if (cfg.plan.scheme == SubstepScheme::frozen_potential_exact_phase && c.beta != 0.0)
    rd.errors.push_back("plan.scheme: exact_phase cannot carry the exchange term, use rk4 when beta != 0");

  auto& dg = cfg.diagnostics;
  dg.enabled = all_diagnostics();
  if (const auto dn = root["diagnostics"]) {
    rd.keys(dn, "diagnostics", {"enabled", "lr_exponents", "window_base", "virial_weight", "cube_r", "cube_stride",
                                "cube_flavor", "pair_samples", "gn_r", "gn_nu"});
    if (const auto en = dn["enabled"]) {
      dg.enabled.clear();
      if (!en.IsSequence()) rd.errors.push_back("diagnostics.enabled: expected a list" + detail::where(en));
      for (std::size_t i = 0; en.IsSequence() && i < en.size(); ++i) {
        const auto v = en[i].IsScalar() ? parse_diagnostic(en[i].Scalar()) : std::nullopt;
        if (v) dg.enabled.insert(*v);
        else rd.errors.push_back("diagnostics.enabled[" + std::to_string(i) + "]: unknown diagnostic" + detail::where(en[i]));
      }
    }
    if (const auto ex = dn["lr_exponents"]) {
      dg.lr_exponents.clear();
      if (!ex.IsSequence()) rd.errors.push_back("diagnostics.lr_exponents: expected a list" + detail::where(ex));
      for (std::size_t i = 0; ex.IsSequence() && i < ex.size(); ++i) {
        const auto v = detail::scalar_number(ex[i]);
        if (v && *v >= 2.0) dg.lr_exponents.push_back(*v);
        else rd.errors.push_back("diagnostics.lr_exponents[" + std::to_string(i) + "]: expected a number >= 2" + detail::where(ex[i]));
      }
    }
    rd.number(dn, "window_base", "diagnostics", dg.window_base);
    rd.string(dn, "virial_weight", "diagnostics", dg.virial_weight);
    rd.number(dn, "cube_r", "diagnostics", dg.cube_r);
    rd.integer(dn, "cube_stride", "diagnostics", dg.cube_stride);
    rd.string(dn, "cube_flavor", "diagnostics", dg.cube_flavor);
    rd.integer(dn, "pair_samples", "diagnostics", dg.pair_samples);
    rd.number(dn, "gn_r", "diagnostics", dg.gn_r);
    rd.number(dn, "gn_nu", "diagnostics", dg.gn_nu);
  }
  if (dg.virial_weight != "abs" && dg.virial_weight != "smooth" && dg.virial_weight != "periodic")
    rd.errors.push_back("diagnostics.virial_weight: expected abs, smooth or periodic (got '" + dg.virial_weight + "')");
  if (!(dg.window_base >= 0.0)) rd.errors.push_back("diagnostics.window_base: must be >= 0");
  if (!(dg.cube_r > 0.0)) rd.errors.push_back("diagnostics.cube_r: must be > 0");
  if (!(dg.gn_r > 0.0) || !(dg.gn_nu > 0.0)) rd.errors.push_back("diagnostics.gn_r and gn_nu: must be > 0");
  if (dg.cube_flavor != "auto") {
    try {
      const auto f = parse_cube_flavor(dg.cube_flavor);
      if (grid_ok) check_flavor_dim(f, d);
    } catch (const DomainError& e) {
      rd.errors.push_back(std::string("diagnostics.cube_flavor: ") + e.what());
    }
  } else if (grid_ok && dg.on(Diagnostic::cubes) && !cfg.free) {
    try {
      check_flavor_dim(default_cube_flavor(d, c.p), d);
    } catch (const DomainError& e) {
      rd.errors.push_back(std::string("diagnostics.cube_flavor: ") + e.what());
    }
  }
  if (grid_ok && dg.on(Diagnostic::cubes)) {
    const double w = std::round(2.0 * dg.cube_r / cfg.grid.spacing());
    if (w < 1.0 || w > static_cast<double>(cfg.grid.n)) rd.errors.push_back("diagnostics.cube_r: side 2r must span between 1 and n cells");
  }

  if (const auto o = root["output"]) {
    rd.keys(o, "output", {"dir"});
    rd.string(o, "dir", "output", cfg.output_dir);
  }
  if (root["seed"]) rd.integer(root, "seed", "config", cfg.seed);

  if (!rd.errors.empty()) throw ValidationError(rd.errors);
  for (std::size_t i = 0; i < cfg.randoms.size(); ++i)
    if (!cfg.randoms[i].seed_given) cfg.randoms[i].spec.seed = derived_seed(cfg.seed, i);
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError({"cannot read config file " + path});
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

/// Canonical YAML with every default filled in. Random seeds are written only
/// when given explicitly, so re-seeding a parsed echo re-derives them.
inline std::string emit_config(const RunConfig& cfg, bool with_output = true) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  const int d = cfg.grid.dim;
  auto vec = [&](const std::array<double, 3>& v) {
    out << YAML::Flow << YAML::BeginSeq;
    for (int a = 0; a < d; ++a) out << v[a];
    out << YAML::EndSeq;
  };
  auto num = [&](double v) {
    if (std::isinf(v)) out << "inf";
    else out << v;
  };
  out << YAML::BeginMap;
  out << YAML::Key << "grid" << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key << "d" << YAML::Value << d
      << YAML::Key << "n" << YAML::Value << cfg.grid.n << YAML::Key << "L" << YAML::Value << cfg.grid.half_length
      << YAML::EndMap;
  const auto& c = cfg.params;
  out << YAML::Key << "params" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "N" << YAML::Value << c.n_components << YAML::Key << "p" << YAML::Value << c.p;
  out << YAML::Key << "gamma1" << YAML::Value << c.gamma1 << YAML::Key << "gamma2" << YAML::Value << c.gamma2;
  out << YAML::Key << "lambda" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (const auto& row : c.lambda) {
    out << YAML::Flow << YAML::BeginSeq;
    for (double v : row) out << v;
    out << YAML::EndSeq;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "beta" << YAML::Value << c.beta << YAML::Key << "exploratory" << YAML::Value << c.exploratory;
  out << YAML::Key << "free" << YAML::Value << cfg.free << YAML::EndMap;

  out << YAML::Key << "initial" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "gaussians" << YAML::Value << YAML::BeginSeq;
  for (const auto& g : cfg.gaussians) {
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "component" << YAML::Value << g.component;
    out << YAML::Key << "center" << YAML::Value;
    vec(g.center);
    out << YAML::Key << "width" << YAML::Value << g.width << YAML::Key << "velocity" << YAML::Value;
    vec(g.velocity);
    out << YAML::Key << "amplitude" << YAML::Value << g.amplitude << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::Key << "random" << YAML::Value << YAML::BeginSeq;
  for (const auto& r : cfg.randoms) {
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "component" << YAML::Value << r.component;
    out << YAML::Key << "max_mode" << YAML::Value << r.spec.max_mode << YAML::Key << "decay" << YAML::Value << r.spec.decay;
    out << YAML::Key << "envelope" << YAML::Value << r.spec.envelope << YAML::Key << "center" << YAML::Value;
    vec(r.spec.center);
    out << YAML::Key << "l2_norm" << YAML::Value << r.spec.l2_norm;
    if (r.seed_given) out << YAML::Key << "seed" << YAML::Value << r.spec.seed;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;

  out << YAML::Key << "plan" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "dt" << YAML::Value << cfg.plan.dt;
  out << YAML::Key << "scheme" << YAML::Value
      << (cfg.plan.scheme == SubstepScheme::rk4_nonlinear ? "rk4" : "exact_phase");
  out << YAML::Key << "steps_per_diagnostic" << YAML::Value << cfg.plan.steps_per_diagnostic;
  out << YAML::Key << "t_final" << YAML::Value << cfg.t_final;
  out << YAML::Key << "stability_guard" << YAML::Value << cfg.plan.stability_guard;
  out << YAML::Key << "checkpoint_every" << YAML::Value << cfg.checkpoint_every << YAML::EndMap;

  const auto& dg = cfg.diagnostics;
  out << YAML::Key << "diagnostics" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "enabled" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (const auto& [k, v] : diagnostic_names())
    if (dg.on(k)) out << v;
  out << YAML::EndSeq << YAML::Key << "lr_exponents" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (double r : dg.lr_exponents) num(r);
  out << YAML::EndSeq;
  out << YAML::Key << "window_base" << YAML::Value << dg.window_base;
  out << YAML::Key << "virial_weight" << YAML::Value << dg.virial_weight;
  out << YAML::Key << "cube_r" << YAML::Value << dg.cube_r << YAML::Key << "cube_stride" << YAML::Value << dg.cube_stride;
  out << YAML::Key << "cube_flavor" << YAML::Value << dg.cube_flavor;
  out << YAML::Key << "pair_samples" << YAML::Value << dg.pair_samples;
  out << YAML::Key << "gn_r" << YAML::Value << dg.gn_r << YAML::Key << "gn_nu" << YAML::Value << dg.gn_nu;
  out << YAML::EndMap;
  if (with_output) out << YAML::Key << "output" << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key << "dir"
                       << YAML::Value << cfg.output_dir << YAML::EndMap;
  out << YAML::Key << "seed" << YAML::Value << cfg.seed;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Identifies everything that affects the trajectory and the diagnostics, not the output location.
inline std::uint64_t config_hash(const RunConfig& cfg) { return fnv1a(emit_config(cfg, false)); }

inline SystemState initial_state(const RunConfig& cfg) {
  const GridSpec& g = cfg.grid;
  SystemState s{cfg.params, {}, 0.0};
  for (int j = 0; j < cfg.params.n_components; ++j) s.fields.emplace_back(g, Representation::physical);
  for (const auto& gs : cfg.gaussians) {
    const SpectralField f = sample_field(g, [&](const auto& x) {
      double r2 = 0.0, phase = 0.0;
      for (int a = 0; a < g.dim; ++a) {
        r2 += (x[a] - gs.center[a]) * (x[a] - gs.center[a]);
        phase += gs.velocity[a] * x[a];
      }
      return gs.amplitude * std::exp(-r2 / (2.0 * gs.width * gs.width)) * cplx(std::cos(phase), std::sin(phase));
    });
    s.fields[gs.component] = s.fields[gs.component] + f;
  }
  for (const auto& r : cfg.randoms)
    s.fields[r.component] = s.fields[r.component] + as_physical(random_field(g, r.spec));
  for (auto& f : s.fields) f = as_physical(f);
  for (int j = 0; j < s.size(); ++j)
    if (!(norm_L2(s.fields[j]) > 0.0))
      throw ValidationError({"initial: component " + std::to_string(j) + " is identically zero"});
  return s;
}

/// Replaces the run seed and re-derives every random seed not given explicitly.
inline void apply_seed(RunConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  for (std::size_t i = 0; i < cfg.randoms.size(); ++i)
    if (!cfg.randoms[i].seed_given) cfg.randoms[i].spec.seed = derived_seed(seed, i);
}

/// Sample scenarios covering the single Gaussian, colliding pair, HF pair and random H^1 cases.
inline std::vector<std::string> preset_names() { return {"free", "choquard-1d", "collision", "hf-pair", "random-h1"}; }

inline RunConfig preset(const std::string& name) {
  RunConfig cfg;
  cfg.diagnostics.enabled = all_diagnostics();
  auto& c = cfg.params;
  if (name == "free") {
    cfg.grid = {1, 512, 40.0};
    cfg.free = true;
    c.lambda = {{0.0}};
    cfg.gaussians = {GaussianSpec{}};
    cfg.plan = {1e-3, SubstepScheme::frozen_potential_exact_phase, 50, 0.5};
    cfg.t_final = 5.0;
  } else if (name == "choquard-1d") {
    // wide box: pair separations stay well below the half period through t = 20
    cfg.grid = {1, 256, 128.0};
    c.p = 3.0;
    c.gamma1 = 0.5;
    c.lambda = {{1.0}};
    GaussianSpec gs;
    gs.width = 3.0;
    gs.amplitude = 0.6;
    cfg.gaussians = {gs};
    cfg.plan = {1e-3, SubstepScheme::frozen_potential_exact_phase, 10, 0.5};
    cfg.t_final = 10.0;
  } else if (name == "collision") {
    cfg.grid = {1, 1024, 64.0};
    c.n_components = 2;
    c.p = 3.0;
    c.gamma1 = 0.5;
    c.lambda = {{1.0, 0.5}, {0.5, 1.0}};
    GaussianSpec a, b;
    a.component = 0;
    a.center = {-8.0, 0.0, 0.0};
    a.velocity = {1.0, 0.0, 0.0};
    b.component = 1;
    b.center = {8.0, 0.0, 0.0};
    b.velocity = {-1.0, 0.0, 0.0};
    cfg.gaussians = {a, b};
    cfg.plan = {1e-3, SubstepScheme::frozen_potential_exact_phase, 20, 0.5};
    cfg.t_final = 10.0;
  } else if (name == "hf-pair") {
    cfg.grid = {3, 32, 8.0};
    c.n_components = 2;
    c.p = 2.0;
    c.gamma1 = 1.5;
    c.gamma2 = 1.5;
    c.lambda = {{1.0, 0.0}, {0.0, 1.0}};
    c.beta = 0.5;
    // odd second component, orthogonal to the centred first one
    GaussianSpec a, b, b2;
    b.component = b2.component = 1;
    b.center = {1.5, 0.0, 0.0};
    b2.center = {-1.5, 0.0, 0.0};
    b2.amplitude = -1.0;
    cfg.gaussians = {a, b, b2};
    cfg.plan = {5e-3, SubstepScheme::rk4_nonlinear, 10, 0.5};
    cfg.t_final = 0.5;
    cfg.diagnostics.pair_samples = 2000;
  } else if (name == "random-h1") {
    cfg.grid = {2, 64, 16.0};
    c.p = 3.0;
    c.gamma1 = 1.0;
    c.lambda = {{1.0}};
    RandomSpec r;
    r.spec.max_mode = 6;
    r.spec.decay = 1.0;
    r.spec.envelope = 3.0;
    cfg.randoms = {r};
    cfg.plan = {2e-3, SubstepScheme::frozen_potential_exact_phase, 25, 0.5};
    cfg.t_final = 2.0;
  } else {
    throw ValidationError({"unknown preset '" + name + "'"});
  }
  for (std::size_t i = 0; i < cfg.randoms.size(); ++i) cfg.randoms[i].spec.seed = derived_seed(cfg.seed, i);
  // round-trip through the parser so presets obey every config rule
  return parse_config(emit_config(cfg));
}

}  // namespace schx
