#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "schx/runner.hpp"

using namespace schx;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

bool mentions(const ValidationError& e, const std::string& needle) {
  for (const auto& v : e.violations())
    if (v.find(needle) != std::string::npos) return true;
  return false;
}

std::vector<std::string> violations_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ValidationError& e) {
    return e.violations();
  }
  return {};
}

const char* kMinimal = R"(
grid: {d: 1, n: 64, L: 16}
params: {N: 1, p: 3, gamma1: 0.5}
initial:
  gaussians:
    - {component: 0}
)";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("schx_test_" + name);
  fs::remove_all(p);
  return p;
}

RunConfig small_run(const std::string& dir) {
  RunConfig cfg = parse_config(R"(
grid: {d: 1, n: 128, L: 24}
params: {N: 1, p: 3, gamma1: 0.5, lambda: 1}
initial:
  gaussians:
    - {component: 0, width: 1.2, velocity: 0.3}
plan: {dt: 2e-3, steps_per_diagnostic: 5, t_final: 1.0, checkpoint_every: 130}
diagnostics: {window_base: 0.05}
)");
  cfg.output_dir = dir;
  return cfg;
}

int run_cli(const std::string& args, std::string* output = nullptr) {
  const std::string cmd = std::string(SCHX_CLI_PATH) + " " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return -1;
  std::string out;
  char buf[512];
  while (fgets(buf, sizeof buf, p)) out += buf;
  const int status = pclose(p);
  if (output) *output = out;
  return WEXITSTATUS(status);
}

}  // namespace

TEST(ParseConfig, MinimalConfigGetsDefaultsAndEchoRoundTrips) {
  const RunConfig cfg = parse_config(kMinimal);
  EXPECT_EQ(cfg.grid.n, 64u);
  EXPECT_EQ(cfg.params.lambda, (std::vector<std::vector<double>>{{1.0}}));
  EXPECT_EQ(cfg.plan.scheme, SubstepScheme::frozen_potential_exact_phase);
  EXPECT_EQ(cfg.diagnostics.enabled, all_diagnostics());
  EXPECT_DOUBLE_EQ(cfg.gaussians[0].width, 1.0);
  const std::string echo = emit_config(cfg);
  EXPECT_EQ(emit_config(parse_config(echo)), echo);
  EXPECT_EQ(config_hash(parse_config(echo)), config_hash(cfg));
}

TEST(ParseConfig, RejectsAboveEnergyCriticalExponent) {
  try {
    parse_config(R"(
grid: {d: 3, n: 16, L: 4}
params: {N: 1, p: 6, gamma1: 2}
initial: {gaussians: [{component: 0, center: [0, 0, 0]}]}
)");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_TRUE(mentions(e, "eq:base upper bound p < (d+γ₁)/(d−2) = 5"));
  }
}

TEST(ParseConfig, RejectsExchangeWithChoquardPower) {
  try {
    parse_config(R"(
grid: {d: 1, n: 64, L: 8}
params: {N: 1, p: 3, gamma1: 0.5, beta: 0.5}
initial: {gaussians: [{component: 0}]}
plan: {scheme: rk4}
)");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_TRUE(mentions(e, "β=0 if p>2"));
  }
}

TEST(ParseConfig, CollectsEveryViolation) {
  const auto v = violations_of(R"(
grid: {d: 1, n: 100, L: 8}
params: {N: 2, p: 1.5, gamma1: 0.5, lambda: [[1, -1], [-1, 1]], colour: red}
initial: {gaussians: [{component: 3}]}
plan: {dt: -1, scheme: leapfrog}
diagnostics: {enabled: [energy, telepathy]}
)");
  auto has = [&](const std::string& s) {
    for (const auto& x : v)
      if (x.find(s) != std::string::npos) return true;
    return false;
  };
  EXPECT_TRUE(has("power of two"));
  EXPECT_TRUE(has("params.colour: unknown key (line 3"));
  EXPECT_TRUE(has("component: must lie in [0, N)"));
  EXPECT_TRUE(has("component 0 has no data"));
  EXPECT_TRUE(has("plan.dt"));
  EXPECT_TRUE(has("plan.scheme"));
  EXPECT_TRUE(has("diagnostics.enabled[1]: unknown diagnostic (line 6"));
  EXPECT_GE(v.size(), 8u);
}

TEST(ParseConfig, SyntaxAndTypeErrorsCarryLineAndColumn) {
  const auto a = violations_of("grid: {d: 1, n: 64\nparams: [\n");
  ASSERT_EQ(a.size(), 1u);
  EXPECT_NE(a[0].find("syntax error at line"), std::string::npos);
  EXPECT_NE(a[0].find("column"), std::string::npos);
  const auto b = violations_of("grid: {d: 1, n: sixty, L: 8}\nparams: {N: 1, p: 3}\ninitial: {gaussians: [{component: 0}]}\n");
  ASSERT_FALSE(b.empty());
  EXPECT_NE(b[0].find("grid.n: expected an integer (line 1, column 17)"), std::string::npos);
}

TEST(ParseConfig, RationalExponentsAndSeedDerivation) {
  const RunConfig cfg = parse_config(std::string(kMinimal) + "diagnostics: {lr_exponents: [10/3, inf]}\nseed: 9\n");
  EXPECT_DOUBLE_EQ(cfg.diagnostics.lr_exponents[0], 10.0 / 3.0);
  EXPECT_TRUE(std::isinf(cfg.diagnostics.lr_exponents[1]));
  RunConfig r = parse_config(R"(
grid: {d: 1, n: 64, L: 8}
params: {N: 1, p: 3, gamma1: 0.5}
initial: {random: [{component: 0}, {component: 0, seed: 5}]}
seed: 3
)");
  EXPECT_EQ(r.randoms[0].spec.seed, derived_seed(3, 0));
  EXPECT_EQ(r.randoms[1].spec.seed, 5u);
  apply_seed(r, 4);
  EXPECT_EQ(r.randoms[0].spec.seed, derived_seed(4, 0));
  EXPECT_EQ(r.randoms[1].spec.seed, 5u);
}

TEST(Presets, AllValidAndHfPairOrthogonal) {
  for (const auto& name : preset_names()) EXPECT_NO_THROW(preset(name)) << name;
  const auto hf = initial_state(preset("hf-pair"));
  EXPECT_LT(std::abs(inner_L2(hf.fields[0], hf.fields[1])), 1e-12);
  EXPECT_THROW(preset("nope"), ValidationError);
}

TEST(RunScenario, FreePresetHasZeroDriftAndConstantPullback) {
  RunConfig cfg = preset("free");
  cfg.t_final = 1.0;
  cfg.diagnostics.window_base = 0.05;
  cfg.output_dir = scratch("free").string();
  const auto r = run_scenario(cfg);
  ASSERT_EQ(r.exit_code, exit_ok);
  const auto& s = r.summary;
  EXPECT_LT(s["mass_drift"][0].get<double>(), 1e-12);
  EXPECT_LT(s["hamiltonian_drift"].get<double>(), 1e-12);
  ASSERT_GE(s["scattering"]["cauchy_h1"].size(), 3u);
  for (const auto& c : s["scattering"]["cauchy_h1"]) EXPECT_LT(c.get<double>(), 1e-11);
  EXPECT_EQ(s["regime"], "free");
}

TEST(RunScenario, CsvSchemaAndSummaryFields) {
  const RunConfig cfg = small_run(scratch("schema").string());
  const auto r = run_scenario(cfg);
  ASSERT_EQ(r.exit_code, exit_ok);
  const fs::path out = cfg.output_dir;
  std::ifstream is(out / "series.csv");
  std::string header, first;
  std::getline(is, header);
  std::getline(is, first);
  EXPECT_EQ(header,
            "time,mass_0,hamiltonian,paper_energy,norm_L4,norm_L3.33333,V,V_dot,V_ddot,I,I_dot,N_C,R_C,N_HF,"
            "cube_sup,min_K,max_eta_violation,gn_ratio,scale,shell_fraction");
  // 17 significant digits round-trip every value
  std::stringstream ss(first);
  std::string cell;
  std::getline(ss, cell, ',');
  std::getline(ss, cell, ',');
  const double m = std::strtod(cell.c_str(), nullptr);
  EXPECT_EQ(format_g17(m), cell);
  EXPECT_EQ(read_csv_rows((out / "series.csv").string()).size(), 101u);
  for (const char* key : {"mass_drift", "hamiltonian_drift", "min_N_C", "min_R_C", "min_N_HF", "min_K",
                          "max_eta_violation", "gn_constant", "morawetz_integrals", "decay", "scattering"})
    EXPECT_TRUE(r.summary.contains(key)) << key;
  EXPECT_GE(r.summary["min_N_C"].get<double>(), 0.0);
  EXPECT_TRUE(fs::exists(out / "psi_plus.schf"));
  EXPECT_TRUE(fs::exists(out / "checkpoint.schf"));
}

TEST(RunScenario, ResumeReproducesUninterruptedRunByteForByte) {
  const RunConfig a = small_run(scratch("resume_a").string());
  ASSERT_EQ(run_scenario(a).exit_code, exit_ok);

  RunConfig b = small_run(scratch("resume_b").string());
  ASSERT_EQ(run_scenario(b).exit_code, exit_ok);
  const fs::path ob = b.output_dir;
  // simulate a crash after the last checkpoint (step 390 of 500)
  {
    std::ofstream os(ob / "series.csv", std::ios::app);
    os << "garbage,row\n";
  }
  fs::remove(ob / "summary.json");
  fs::remove(ob / "psi_plus.schf");
  RunOptions opt;
  opt.resume = true;
  ASSERT_EQ(run_scenario(b, opt).exit_code, exit_ok);
  const fs::path oa = a.output_dir;
  EXPECT_EQ(slurp(oa / "series.csv"), slurp(ob / "series.csv"));
  std::string sa = slurp(oa / "summary.json"), sb = slurp(ob / "summary.json");
  EXPECT_EQ(sa, sb);
  EXPECT_EQ(slurp(oa / "psi_plus.schf"), slurp(ob / "psi_plus.schf"));
}

TEST(RunScenario, ResumeRefusesForeignCheckpoint) {
  RunConfig a = small_run(scratch("foreign").string());
  ASSERT_EQ(run_scenario(a).exit_code, exit_ok);
  a.params.lambda = {{2.0}};
  RunOptions opt;
  opt.resume = true;
  EXPECT_EQ(run_scenario(a, opt).exit_code, exit_resume_mismatch);
}

TEST(RunScenario, WorkerCountDoesNotChangeBytes) {
  auto make = [](const std::string& dir) {
    RunConfig cfg = parse_config(R"(
grid: {d: 2, n: 128, L: 12}
params: {N: 1, p: 3, gamma1: 1, lambda: 1}
initial: {gaussians: [{component: 0, center: [0.5, 0], velocity: [0.4, -0.2]}]}
plan: {dt: 5e-3, steps_per_diagnostic: 4, t_final: 0.04}
diagnostics: {pair_samples: 500}
)");
    cfg.output_dir = dir;
    return cfg;
  };
  std::string ref;
  for (int w : {1, 3}) {
    set_worker_count(w);
    const auto cfg = make(scratch("workers" + std::to_string(w)).string());
    ASSERT_EQ(run_scenario(cfg).exit_code, exit_ok);
    const std::string csv = slurp(fs::path(cfg.output_dir) / "series.csv");
    if (ref.empty()) ref = csv;
    else EXPECT_EQ(csv, ref);
  }
  set_worker_count(1);
}

TEST(RunScenario, AbortSurfacesLastCheckpoint) {
  // two colliding bumps: the overlap raises the potential peak ~1.8x near t = 0.6
  RunConfig cfg = parse_config(R"(
grid: {d: 1, n: 256, L: 32}
params: {N: 1, p: 3, gamma1: 0.5, lambda: 1}
initial:
  gaussians:
    - {component: 0, center: -3, velocity: 2}
    - {component: 0, center: 3, velocity: -2}
plan: {dt: 1e-2, steps_per_diagnostic: 10, t_final: 3, checkpoint_every: 20}
diagnostics: {enabled: [energy]}
)");
  const SystemState s0 = initial_state(cfg);
  const double p0 = potential_magnitude(s0, nonlocal_potentials(s0)) * cfg.plan.dt;
  cfg.plan.stability_guard = 1.5 * p0;
  cfg.output_dir = scratch("abort").string();
  const auto r = run_scenario(cfg);
  ASSERT_EQ(r.exit_code, exit_aborted);
  EXPECT_EQ(r.summary["status"], "aborted");
  EXPECT_FALSE(r.last_checkpoint.empty());
  EXPECT_EQ(r.summary["last_checkpoint"].get<std::string>(), r.last_checkpoint);
}

TEST(OracleCheck, SmallGridPassesCorruptKernelFailsEmptySetIsEmpty) {
  RunConfig cfg = load_config(std::string(SCHX_CONFIG_DIR) + "/oracle-small.yaml");
  for (const auto& e : oracle_check(cfg)) EXPECT_TRUE(e.pass) << e.name << " " << e.deviation;
  OracleOptions bad;
  bad.corrupt_kernel = true;
  std::vector<std::string> failed;
  for (const auto& e : oracle_check(cfg, bad))
    if (!e.pass) failed.push_back(e.name);
  EXPECT_EQ(failed, std::vector<std::string>{"convolve"});
  cfg.diagnostics.enabled.clear();
  EXPECT_TRUE(oracle_check(cfg).empty());
  cfg.grid = {2, 128, 8.0};
  EXPECT_THROW(oracle_check(cfg), CostGuardError);
}

TEST(Cli, CommandsAndExitCodes) {
  const std::string dir = SCHX_CONFIG_DIR;
  std::string out;
  EXPECT_EQ(run_cli("validate-config --config " + dir + "/choquard-1d.yaml", &out), 0);
  EXPECT_NE(out.find("regime:"), std::string::npos);
  EXPECT_EQ(run_cli("oracle-check --config " + dir + "/oracle-small.yaml", &out), 0);
  EXPECT_EQ(run_cli("oracle-check --config " + dir + "/oracle-small.yaml --corrupt-kernel", &out), exit_oracle_failed);
  EXPECT_NE(out.find("convolve                 FAIL"), std::string::npos);

  const fs::path bad = scratch("bad.yaml");
  {
    std::ofstream os(bad);
    os << "grid: {d: 3, n: 16, L: 4}\nparams: {N: 1, p: 6, gamma1: 2}\ninitial: {gaussians: [{component: 0, center: [0,0,0]}]}\n";
  }
  EXPECT_EQ(run_cli("validate-config --config " + bad.string(), &out), exit_invalid);
  EXPECT_NE(out.find("eq:base upper bound"), std::string::npos);

  const fs::path sweep = scratch("sweep");
  EXPECT_EQ(run_cli("sweep --config " + dir + "/free.yaml --set plan.t_final=0.05,0.1 --out " + sweep.string(), &out), 0);
  EXPECT_TRUE(fs::exists(sweep / "run_000" / "summary.json"));
  EXPECT_TRUE(fs::exists(sweep / "run_001" / "summary.json"));

  const fs::path run = scratch("cli_run");
  EXPECT_EQ(run_cli("run --preset free --out " + run.string(), &out), 0);
  EXPECT_EQ(run_cli("resume --out " + run.string(), &out), 5);  // no checkpoint_every in the preset
}
