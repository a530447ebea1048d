#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "schx/integrator.hpp"
#include "schx/random_field.hpp"
#include "schx/snapshot.hpp"

using namespace schx;

namespace {

SystemState choquard_1d(std::size_t n = 128, double L = 16.0) {
  const GridSpec g{1, n, L};
  CouplingParams c;
  c.p = 3.0;
  c.gamma1 = 0.5;
  c.lambda = {{1.0}};
  SpectralField f = sample_field(g, [](const auto& x) { return cplx(std::exp(-x[0] * x[0] / 2.0), 0.0); });
  return SystemState{c, {f}, 0.0};
}

SystemState hf_pair() {
  const GridSpec g{2, 32, 6.0};
  CouplingParams c;
  c.n_components = 2;
  c.p = 2.0;
  c.gamma1 = 1.0;
  c.gamma2 = 1.0;
  c.lambda = {{1.0, 0.0}, {0.0, 1.0}};
  c.beta = 0.5;
  RandomFieldSpec s;
  s.max_mode = 3;
  s.envelope = 1.5;
  s.seed = 4;
  SpectralField a = random_field(g, s);
  s.seed = 5;
  SpectralField b = random_field(g, s);
  return SystemState{c, {a, b}, 0.0};
}

double state_diff(const SystemState& a, const SystemState& b) {
  double m = 0.0;
  for (int j = 0; j < a.size(); ++j) m = std::max(m, max_abs_diff(a.fields[j], b.fields[j]));
  return m;
}

}  // namespace

TEST(StrangStep, FreeWhenUncoupled) {
  SystemState s = choquard_1d();
  s.params.lambda = {{0.0}};
  const StepPlan plan{0.01, SubstepScheme::frozen_potential_exact_phase, 1, 0.5};
  const SystemState out = strang_step(s, plan);
  EXPECT_LT(max_abs_diff(out.fields[0], free_propagate(s.fields[0], 0.01)), 1e-12);
  EXPECT_DOUBLE_EQ(out.time, 0.01);
}

TEST(StrangStep, SecondOrderGlobalError) {
  const SystemState s0 = choquard_1d();
  const double T = 0.5;
  auto solve = [&](double dt) {
    StepPlan plan{dt, SubstepScheme::frozen_potential_exact_phase, 1000000, 0.5};
    return run(s0, plan, T);
  };
  const SystemState ref = solve(0.02 / 64);
  const double e1 = state_diff(solve(0.02), ref);
  const double e2 = state_diff(solve(0.01), ref);
  const double ratio = e1 / e2;
  EXPECT_GE(ratio, 3.5);
  EXPECT_LE(ratio, 4.5);
}

TEST(StrangStep, MassConservedByPhaseScheme) {
  const SystemState s0 = choquard_1d(256, 32.0);
  const StepPlan plan{1e-3, SubstepScheme::frozen_potential_exact_phase, 1000, 0.5};
  const SystemState s = run(s0, plan, 1.0);
  EXPECT_LE(std::abs(mass(s, 0) - mass(s0, 0)) / mass(s0, 0), 1e-10);
}

TEST(StrangStep, TimeReversible) {
  const SystemState s0 = choquard_1d();
  StepPlan plan{0.01, SubstepScheme::frozen_potential_exact_phase, 1, 0.5};
  const SystemState fwd = strang_step(s0, plan);
  plan.dt = -0.01;
  const SystemState back = strang_step(fwd, plan);
  EXPECT_LT(state_diff(back, s0), 1e-9);
}

TEST(StrangStep, GuardAndSchemeContracts) {
  const SystemState s0 = choquard_1d();
  StepPlan plan{10.0, SubstepScheme::frozen_potential_exact_phase, 1, 0.5};
  try {
    strang_step(s0, plan);
    FAIL();
  } catch (const StabilityError& e) {
    EXPECT_GT(e.product(), 0.5);
  }
  plan.stability_guard = 1e9;
  EXPECT_NO_THROW(strang_step(s0, plan));
  const SystemState hf = hf_pair();
  plan = StepPlan{0.01, SubstepScheme::frozen_potential_exact_phase, 1, 0.5};
  EXPECT_THROW(strang_step(hf, plan), ContractViolation);
}

TEST(StrangStep, Rk4HartreeFockKeepsMassClose) {
  const SystemState s0 = hf_pair();
  const StepPlan plan{0.005, SubstepScheme::rk4_nonlinear, 10, 0.5};
  const SystemState s = run(s0, plan, 0.2);
  for (int j = 0; j < 2; ++j) EXPECT_LT(std::abs(mass(s, j) / mass(s0, j) - 1.0), 1e-6);
  const auto e0 = energy(s0), e1 = energy(s);
  EXPECT_LT(std::abs(*e1.hamiltonian / *e0.hamiltonian - 1.0), 1e-5);
}

TEST(Run, ZeroStepsAndSampling) {
  const SystemState s0 = choquard_1d();
  StepPlan plan{0.01, SubstepScheme::frozen_potential_exact_phase, 1, 0.5};
  const SystemState same = run(s0, plan, 0.0);
  EXPECT_EQ(same.fields[0].values, s0.fields[0].values);
  std::vector<double> t1, t2;
  RunHooks h1, h2;
  h1.sinks.push_back([&](const SystemState& s, long long) { t1.push_back(s.time); });
  h2.sinks.push_back([&](const SystemState& s, long long) { t2.push_back(s.time); });
  const SystemState a = run(s0, plan, 0.2, h1);
  plan.steps_per_diagnostic = 2;
  const SystemState b = run(s0, plan, 0.2, h2);
  EXPECT_EQ(a.fields[0].values, b.fields[0].values);
  EXPECT_EQ(t1.size(), 21u);
  EXPECT_EQ(t2.size(), 11u);
}

TEST(Run, ResumeFromCheckpointIsBitExact) {
  const SystemState s0 = choquard_1d();
  const StepPlan plan{0.01, SubstepScheme::frozen_potential_exact_phase, 1, 0.5};
  const SystemState full = run(s0, plan, 0.3);
  const auto path = (std::filesystem::temp_directory_path() / "schx_resume.bin").string();
  RunHooks hooks;
  hooks.checkpoint_every = 10;
  hooks.checkpoint = [&](const SystemState& s, long long step) {
    if (step == 10) write_snapshot(path, s.fields, s.time);
  };
  run(s0, plan, 0.2, hooks);
  const Snapshot snap = read_snapshot(path);
  SystemState resumed{s0.params, snap.fields, snap.time};
  const SystemState end = run(resumed, plan, 0.3);
  EXPECT_EQ(end.fields[0].values, full.fields[0].values);
  std::filesystem::remove(path);
}

TEST(Run, WorkerCountDoesNotChangeTrajectory) {
  const SystemState s0 = choquard_1d(8192, 64.0);
  const StepPlan plan{0.01, SubstepScheme::frozen_potential_exact_phase, 1, 0.5};
  set_worker_count(1);
  const SystemState a = run(s0, plan, 0.05);
  set_worker_count(3);
  const SystemState b = run(s0, plan, 0.05);
  set_worker_count(1);
  EXPECT_EQ(a.fields[0].values, b.fields[0].values);
}
