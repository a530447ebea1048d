#include <gtest/gtest.h>

#include <cmath>

#include "schx/cubes.hpp"
#include "schx/integrator.hpp"
#include "schx/morawetz.hpp"
#include "schx/oracle.hpp"
#include "schx/random_field.hpp"

using namespace schx;

namespace {

CouplingParams choquard_params(int N = 1) {
  CouplingParams c;
  c.n_components = N;
  c.p = 3.0;
  c.gamma1 = 0.5;
  c.lambda.assign(N, std::vector<double>(N, 0.5));
  for (int j = 0; j < N; ++j) c.lambda[j][j] = 1.0;
  return c;
}

CouplingParams hf_params(int N, double gamma) {
  CouplingParams c;
  c.n_components = N;
  c.p = 2.0;
  c.gamma1 = gamma;
  c.gamma2 = gamma;
  c.lambda.assign(N, std::vector<double>(N, 0.0));
  for (int j = 0; j < N; ++j) c.lambda[j][j] = 1.0;
  c.beta = 0.5;
  return c;
}

SpectralField rnd(const GridSpec& g, std::uint64_t seed, double envelope, int modes = 3) {
  RandomFieldSpec s;
  s.max_mode = modes;
  s.decay = 0.5;
  s.envelope = envelope;
  s.seed = seed;
  return random_field(g, s);
}

SystemState random_state(const GridSpec& g, const CouplingParams& c, std::uint64_t seed, double envelope) {
  SystemState s{c, {}, 0.0};
  for (int j = 0; j < c.n_components; ++j) s.fields.push_back(rnd(g, seed + j, envelope));
  return s;
}

SystemState boosted_choquard_1d() {
  const GridSpec g{1, 256, 32.0};
  SpectralField f = sample_field(g, [](const auto& x) {
    return std::exp(-(x[0] - 1.0) * (x[0] - 1.0) / 2.0) * cplx(std::cos(0.7 * x[0]), std::sin(0.7 * x[0]));
  });
  return SystemState{choquard_params(), {f}, 0.0};
}

struct FdErrors {
  double first = 0.0, second = 0.0;
};

FdErrors virial_fd_errors(const SystemState& s0, const VirialWeight& w, SubstepScheme scheme, double dt, double t0) {
  const StepPlan plan{dt, scheme, 1 << 30, 0.5};
  const SystemState a = run(s0, plan, t0 - dt);
  const SystemState b = strang_step(a, plan);
  const SystemState c = strang_step(b, plan);
  const double va = virial(a, w), vb = virial(b, w), vc = virial(c, w);
  FdErrors e;
  e.first = std::abs(virial_dot(b, w) - (vc - va) / (2.0 * dt));
  e.second = std::abs(virial_ddot_terms(b, w).sum() - (vc - 2.0 * vb + va) / (dt * dt));
  return e;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST(Virial, TrivialCases) {
  const GridSpec g{1, 64, 8.0};
  SystemState zero{choquard_params(), {SpectralField(g)}, 0.0};
  EXPECT_EQ(virial(zero, abs_virial_weight(g)), 0.0);
  const auto t = virial_ddot_terms(zero, smooth_virial_weight(g));
  EXPECT_EQ(t.sum(), 0.0);
  const SystemState s = random_state(g, choquard_params(2), 3, 2.0);
  EXPECT_NEAR(virial(s, constant_virial_weight(g, 1.0)), total_mass(s), 1e-12 * total_mass(s));
  EXPECT_EQ(virial_dot(s, constant_virial_weight(g, 1.0)), 0.0);
}

TEST(Virial, TranslatedGaussianAbsWeight) {
  const GridSpec g{1, 1024, 16.0};
  const double x0 = 5.0;
  SpectralField f = sample_field(g, [&](const auto& x) { return cplx(std::exp(-(x[0] - x0) * (x[0] - x0) / 0.5), 0.0); });
  const SystemState s{choquard_params(), {f}, 0.0};
  EXPECT_LT(rel(virial(s, abs_virial_weight(g)), x0 * total_mass(s)), 1e-10);
}

TEST(VirialDot, RealDataAndBoostedGaussian) {
  const GridSpec g{1, 512, 16.0};
  const double x0 = -5.0, v = 1.5;
  SpectralField real = sample_field(g, [&](const auto& x) { return cplx(std::exp(-(x[0] - x0) * (x[0] - x0)), 0.0); });
  const SystemState r{choquard_params(), {real}, 0.0};
  EXPECT_LT(std::abs(virial_dot(r, abs_virial_weight(g))), 1e-13);
  SpectralField boosted = sample_field(g, [&](const auto& x) {
    return std::exp(-(x[0] - x0) * (x[0] - x0)) * cplx(std::cos(v * x[0]), std::sin(v * x[0]));
  });
  const SystemState b{choquard_params(), {boosted}, 0.0};
  EXPECT_LT(rel(virial_dot(b, abs_virial_weight(g)), 2.0 * v * -1.0 * total_mass(b)), 1e-9);
}

TEST(VirialWeights, SmoothBilaplacianMatchesSpectral) {
  for (int d = 1; d <= 3; ++d) {
    const GridSpec g{d, d == 1 ? 256u : (d == 2 ? 128u : 64u), 8.0};
    SpectralField f = sample_field(g, [&](const auto& x) {
      double r2 = 0.0;
      for (int a = 0; a < d; ++a) r2 += (x[a] - 0.3) * (x[a] - 0.3);
      return cplx(std::exp(-r2 / 4.0), 0.0);
    });
    const SystemState s{choquard_params(), {f}, 0.0};
    const double closed = virial_ddot_terms(s, smooth_virial_weight(g, 1.0, true)).linear_bilap;
    const double spectral = virial_ddot_terms(s, smooth_virial_weight(g, 1.0)).linear_bilap;
    EXPECT_LT(rel(spectral, closed), 1e-7) << "d=" << d;
  }
}

TEST(VirialWeights, PeriodicTracksSmoothNearOrigin) {
  const GridSpec g{1, 256, 64.0};
  const VirialWeight p = periodic_virial_weight(g, 3.0), s = smooth_virial_weight(g, 3.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.coordinate(i);
    if (std::abs(x) < 4.0) EXPECT_NEAR(p.a[i], s.a[i], 0.02 * s.a[i]) << x;
    if (i > 0) EXPECT_NEAR(p.a[i], p.a[g.size() - i], 1e-12);
  }
  // derivatives of a periodic weight come out of the same spectral operators as the flow
  EXPECT_NEAR(p.grad[0][g.size() / 2], 0.0, 1e-12);
  EXPECT_GT(p.lap[g.size() / 2], 0.0);
  EXPECT_THROW(periodic_virial_weight(g, 0.0), DomainError);
}

TEST(VirialIdentity, PeriodicWeightHasNoBoundaryFloor) {
  // a wide box where the closed-form weight's kink at the boundary stalls the first identity
  const GridSpec g{1, 256, 128.0};
  const SpectralField f = sample_field(g, [](const auto& x) { return cplx(0.6 * std::exp(-x[0] * x[0] / 18.0), 0.0); });
  const SystemState s0{choquard_params(), {f}, 0.0};
  const VirialWeight w = periodic_virial_weight(g, 3.0);
  std::vector<FdErrors> errs;
  for (double dt : {0.16, 0.08, 0.04, 0.02})
    errs.push_back(virial_fd_errors(s0, w, SubstepScheme::frozen_potential_exact_phase, dt, 4.0));
  EXPECT_GE(std::log2(errs.front().first / errs.back().first) / 3.0, 1.9);
  EXPECT_GE(std::log2(errs.front().second / errs.back().second) / 3.0, 1.9);
}

TEST(VirialDdot, PTwoKillsDivergenceTerm) {
  const GridSpec g{2, 32, 6.0};
  const SystemState s = random_state(g, hf_params(2, 1.0), 11, 1.5);
  const auto t = virial_ddot_terms(s, smooth_virial_weight(g));
  EXPECT_EQ(t.choquard_divergence, 0.0);
  EXPECT_NE(t.choquard_gradient, 0.0);
  EXPECT_NE(t.hf_gradient, 0.0);
}

TEST(VirialIdentity, FiniteDifferenceOrderChoquard) {
  const SystemState s0 = boosted_choquard_1d();
  const VirialWeight w = smooth_virial_weight(s0.grid());
  std::vector<FdErrors> errs;
  for (double dt : {0.02, 0.01, 0.005})
    errs.push_back(virial_fd_errors(s0, w, SubstepScheme::frozen_potential_exact_phase, dt, 0.4));
  for (std::size_t i = 1; i < errs.size(); ++i) {
    EXPECT_GE(std::log2(errs[i - 1].first / errs[i].first), 1.9);
    EXPECT_GE(std::log2(errs[i - 1].second / errs[i].second), 1.9);
  }
}

TEST(VirialIdentity, FiniteDifferenceOrderHartreeFock) {
  const GridSpec g{2, 128, 10.0};
  const SpectralField a = sample_field(g, [](const auto& x) {
    return std::exp(-(x[0] * x[0] + x[1] * x[1]) / 2.0) * cplx(std::cos(0.5 * x[1]), std::sin(0.5 * x[1]));
  });
  const SpectralField b = sample_field(g, [](const auto& x) {
    return cplx(x[0] - 0.5, 0.3 * x[1]) * std::exp(-((x[0] - 0.5) * (x[0] - 0.5) + x[1] * x[1]) / 2.0);
  });
  const SystemState s0{hf_params(2, 1.0), {a, b}, 0.0};
  const VirialWeight w = smooth_virial_weight(g);
  std::vector<FdErrors> errs;
  for (double dt : {0.01, 0.005, 0.0025})
    errs.push_back(virial_fd_errors(s0, w, SubstepScheme::rk4_nonlinear, dt, 0.1));
  for (std::size_t i = 1; i < errs.size(); ++i) {
    EXPECT_GE(std::log2(errs[i - 1].first / errs[i].first), 1.9);
    EXPECT_GE(std::log2(errs[i - 1].second / errs[i].second), 1.9);
  }
}

TEST(InteractionAction, PointMasses) {
  const GridSpec g{1, 64, 8.0};
  const double h = g.spacing();
  SpectralField f(g);
  f.values[20] = std::sqrt(2.0 / h);
  SystemState one{choquard_params(), {f}, 0.0};
  EXPECT_EQ(interaction_action(one), 0.0);
  SpectralField two(g);
  two.values[40] = std::sqrt(3.0 / h);
  SystemState pair{choquard_params(2), {f, two}, 0.0};
  const double s = 20 * h;
  EXPECT_NEAR(interaction_action(pair), 2.0 * 2.0 * 3.0 * s, 1e-9);
}

TEST(InteractionAction, MatchesDoubleSumOracle) {
  const GridSpec g{1, 32, 4.0};
  const SystemState s = random_state(g, choquard_params(2), 21, 0.0);
  EXPECT_LT(rel(interaction_action(s), oracle::interaction_action(s)), 1e-9);
  EXPECT_LT(rel(interaction_action_dot(s), oracle::interaction_action_dot(s)), 1e-9);
}

TEST(InteractionActionDot, RealDataAndBound) {
  const GridSpec g{2, 32, 6.0};
  SystemState real = random_state(g, choquard_params(), 1, 1.5);
  for (auto& v : real.fields[0].values) v = std::abs(v);
  EXPECT_LT(std::abs(interaction_action_dot(real)), 1e-12);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const GridSpec g1{1, 128, 8.0};
    const SystemState s = random_state(g1, choquard_params(2), 100 + 2 * seed, 2.0);
    EXPECT_LE(std::abs(interaction_action_dot(s)), interaction_action_dot_bound(s));
  }
}

// The kernel path differs from the semi-discrete time derivative at O(h^2)
// (sampled sign kernel vs spectral derivative), so refine the grid at small dt.
TEST(InteractionActionDot, FiniteDifferenceAgreement) {
  std::vector<double> errs;
  for (std::size_t n : {256u, 512u, 1024u}) {
    const GridSpec g{1, n, 32.0};
    SpectralField f = sample_field(g, [](const auto& x) {
      return std::exp(-(x[0] - 1.0) * (x[0] - 1.0) / 2.0) * cplx(std::cos(0.7 * x[0]), std::sin(0.7 * x[0]));
    });
    const SystemState s0{choquard_params(), {f}, 0.0};
    const double dt = 0.0025;
    const StepPlan plan{dt, SubstepScheme::frozen_potential_exact_phase, 1 << 30, 0.5};
    const SystemState a = run(s0, plan, 0.4 - dt);
    const SystemState b = strang_step(a, plan);
    const SystemState c = strang_step(b, plan);
    errs.push_back(std::abs(interaction_action_dot(b) - (interaction_action(c) - interaction_action(a)) / (2 * dt)));
  }
  for (std::size_t i = 1; i < errs.size(); ++i) EXPECT_GE(std::log2(errs[i - 1] / errs[i]), 1.9);
  EXPECT_LT(errs.back(), 1e-3 * 5.78);
}

TEST(NonlinearTerms, TrivialZeros) {
  const GridSpec g{1, 32, 4.0};
  CouplingParams c = choquard_params(2);
  c.p = 2.0;
  const SystemState s = random_state(g, c, 5, 0.0);
  const auto t = nonlinear_terms(s);
  EXPECT_EQ(t.N_C, 0.0);
  EXPECT_EQ(t.N_HF, 0.0);
  EXPECT_NE(t.R_C, 0.0);
}

TEST(NonlinearTerms, MatchBruteForceOracle) {
  const GridSpec g{1, 32, 4.0};
  const SystemState ch = random_state(g, choquard_params(2), 31, 0.0);
  const auto t = nonlinear_terms(ch);
  const auto o = oracle::nonlinear_terms(ch);
  EXPECT_LT(rel(t.N_C, o[0]), 1e-8);
  EXPECT_LT(rel(t.R_C, o[1]), 1e-8);
  const SystemState hf = random_state(g, hf_params(3, 0.5), 41, 0.0);
  const auto th = nonlinear_terms(hf);
  const auto oh = oracle::nonlinear_terms(hf);
  EXPECT_LT(rel(th.R_C, oh[1]), 1e-8);
  EXPECT_LT(rel(th.N_HF, oh[2]), 1e-8);
}

TEST(NonlinearTerms, Positivity) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const GridSpec g1{1, 256, 16.0};
    const SystemState ch = random_state(g1, choquard_params(2), 50 + seed, 3.0);
    const double tol = 1e-8 * problem_scale(ch);
    const auto t = nonlinear_terms(ch);
    EXPECT_GE(t.N_C, -tol);
    EXPECT_GE(t.R_C, -tol);
    const GridSpec g3{3, 16, 6.0};
    const SystemState hf = random_state(g3, hf_params(2, 1.5), 70 + seed, 1.5);
    const auto th = nonlinear_terms(hf);
    EXPECT_GE(th.R_C, -1e-8 * problem_scale(hf));
    EXPECT_GE(th.N_HF, -1e-8 * problem_scale(hf));
  }
}

TEST(NonlinearTerms, BelowSecondDifferenceOfAction) {
  const SystemState s0 = boosted_choquard_1d();
  const double dt = 0.005;
  const StepPlan plan{dt, SubstepScheme::frozen_potential_exact_phase, 1 << 30, 0.5};
  SystemState a = s0, b = strang_step(a, plan);
  for (int step = 0; step < 40; ++step) {
    const SystemState c = strang_step(b, plan);
    const double Idd = (interaction_action(c) - 2.0 * interaction_action(b) + interaction_action(a)) / (dt * dt);
    const auto t = nonlinear_terms(b);
    EXPECT_LE(t.N_C + t.R_C + t.N_HF, Idd + 1e-6 * problem_scale(b));
    a = b;
    b = c;
  }
}

TEST(KKernel, TrivialAndPointMass) {
  const GridSpec g{1, 64, 8.0};
  SpectralField f(g);
  f.values[32] = 1.0;  // x = 0
  const SystemState s{choquard_params(), {f}, 0.0};
  EXPECT_EQ(k_kernel_check(s, {{40, 40}}), 0.0);
  EXPECT_NEAR(k_kernel_check(s, {{40, 45}, {50, 36}}), 0.0, 1e-15);
}

TEST(KKernel, NonnegativeOnRandomPairs) {
  const GridSpec g{2, 64, 8.0};
  const SystemState s = random_state(g, choquard_params(2), 9, 2.0);
  const auto pairs = sample_interior_pairs(g, 10000, 17);
  for (const auto& [x, z] : pairs) {
    for (int a = 0; a < 2; ++a) {
      EXPECT_LE(std::abs(g.position(x)[a]), 4.0);
      EXPECT_LE(std::abs(g.position(z)[a]), 4.0);
    }
  }
  EXPECT_GE(k_kernel_check(s, pairs), -1e-8 * problem_scale(s));
  EXPECT_EQ(sample_interior_pairs(g, 10, 3), sample_interior_pairs(g, 10, 3));
  EXPECT_THROW(all_interior_pairs(g), CostGuardError);
  const GridSpec small{1, 32, 4.0};
  const SystemState t = random_state(small, choquard_params(), 2, 1.0);
  EXPECT_GE(k_kernel_check(t, all_interior_pairs(small)), -1e-8 * problem_scale(t));
}

TEST(EtaBound, EqualityAndRandom) {
  const GridSpec g{2, 32, 6.0};
  const SystemState one = random_state(g, choquard_params(), 3, 0.0);
  const auto pairs = sample_interior_pairs(g, 10000, 5);
  const double scale1 = problem_scale(one);
  EXPECT_LE(std::abs(eta_bound_check(one, pairs)), 1e-12 * scale1);
  std::vector<IndexPair> diag;
  for (std::size_t i = 0; i < g.size(); i += 7) diag.emplace_back(i, i);
  const SystemState three = random_state(g, hf_params(3, 1.0), 8, 0.0);
  EXPECT_LE(std::abs(eta_bound_check(three, diag)), 1e-12 * problem_scale(three));
  EXPECT_LE(eta_bound_check(three, pairs), 1e-12 * problem_scale(three));
}

TEST(Cubes, FamilyCoverage) {
  for (int d = 1; d <= 3; ++d) {
    const GridSpec g{d, 32, 4.0};
    const CubeFamily f = make_cube_family(g);
    EXPECT_EQ(f.width, 8u);
    EXPECT_EQ(f.stride, 4u);
    EXPECT_LE(f.overlap_factor(), std::size_t{1} << d);
    std::size_t per_axis = 32 / 4, total = 1;
    for (int a = 0; a < d; ++a) total *= per_axis;
    EXPECT_EQ(f.anchors.size(), total);
  }
  EXPECT_THROW(make_cube_family(GridSpec{1, 32, 4.0}, 1.0, 16), DomainError);
}

TEST(Cubes, ZeroStateAndFlavorMismatch) {
  const GridSpec g{1, 64, 8.0};
  const SystemState zero{choquard_params(), {SpectralField(g)}, 0.0};
  const auto fam = make_cube_family(g);
  EXPECT_EQ(cube_statistic(zero, fam, CubeFlavor::diagonal_triple).sup_value, 0.0);
  EXPECT_THROW(cube_statistic(zero, fam, CubeFlavor::triple), DomainError);
  EXPECT_THROW(cube_statistic(zero, fam, CubeFlavor::quartic), DomainError);
  EXPECT_THROW(cube_statistic(zero, fam, CubeFlavor::pair), DomainError);
  EXPECT_EQ(parse_cube_flavor("quartic"), CubeFlavor::quartic);
  EXPECT_THROW(parse_cube_flavor("bogus"), DomainError);
}

TEST(Cubes, SingleCubeConcentration) {
  const GridSpec g{1, 64, 8.0};  // h = 0.25, width 8, anchors every 4 cells
  SpectralField f(g);
  for (std::size_t i = 30; i <= 33; ++i) f.values[i] = cplx(0.3 * (i - 28.0), 0.1);
  const SystemState s{choquard_params(), {f}, 0.0};
  const auto st = cube_statistic(s, make_cube_family(g), CubeFlavor::diagonal_triple);
  const double h = g.spacing();
  double p3 = 0.0, p3m = 0.0;
  for (const auto& v : f.values) {
    p3 += std::pow(std::abs(v), 3) * h;
    p3m += std::pow(std::abs(v), 3) * std::norm(v) * h;
  }
  EXPECT_EQ(st.argmax_anchor, 32u);
  EXPECT_NEAR(st.sup_value, (4.0 / 3.0) * p3m * p3, 1e-12 * st.sup_value);

  const GridSpec g3{3, 16, 4.0};
  SpectralField q(g3);
  q.values[g3.flatten({8, 8, 8})] = 2.0;
  q.values[g3.flatten({9, 8, 7})] = 1.0;
  const SystemState s3{hf_params(1, 0.5), {q}, 0.0};
  const double h3 = g3.cell_volume();
  const auto q3 = cube_statistic(s3, make_cube_family(g3), CubeFlavor::quartic);
  EXPECT_NEAR(q3.sup_value, (16.0 + 1.0) * h3, 1e-12);
}

TEST(Cubes, ArgmaxInvariantUnderScaling) {
  const GridSpec g{2, 64, 8.0};
  SystemState s = random_state(g, choquard_params(2), 12, 2.0);
  const auto fam = make_cube_family(g);
  const auto a = cube_statistic(s, fam, CubeFlavor::triple);
  for (auto& f : s.fields) f = cplx(3.7, 0.0) * f;
  const auto b = cube_statistic(s, fam, CubeFlavor::triple);
  EXPECT_EQ(a.argmax_anchor, b.argmax_anchor);
  EXPECT_GT(b.sup_value, a.sup_value);
}

TEST(CubeMassTracker, ZeroSupportedAndLipschitz) {
  const GridSpec g{1, 256, 16.0};
  const SystemState zero{choquard_params(), {SpectralField(g)}, 0.0};
  EXPECT_EQ(cube_mass_tracker(zero, {0.0, 0.0, 0.0}), 0.0);
  SpectralField f(g);
  for (std::size_t i = 0; i < g.n; ++i)
    if (std::abs(g.coordinate(i) - 3.0) < 0.99) f.values[i] = cplx(1.0 + 0.1 * i, -0.5);
  const SystemState in{choquard_params(), {f}, 0.0};
  EXPECT_NEAR(cube_mass_tracker(in, {3.0, 0.0, 0.0}), total_mass(in), 1e-12 * total_mass(in));

  double slope = 0.0;
  for (double t = 1.0; t < 2.0; t += 1e-4)
    slope = std::max(slope, std::abs(detail::cutoff_profile(t + 1e-6) - detail::cutoff_profile(t - 1e-6)) / 2e-6);
  const SystemState s0 = boosted_choquard_1d();
  const double dt = 0.01;
  const StepPlan plan{dt, SubstepScheme::frozen_potential_exact_phase, 1 << 30, 0.5};
  SystemState s = s0;
  double prev = cube_mass_tracker(s, {1.0, 0.0, 0.0});
  for (int step = 0; step < 100; ++step) {
    s = strang_step(s, plan);
    const double cur = cube_mass_tracker(s, {1.0, 0.0, 0.0});
    const double h1 = std::pow(norm_H1(s.fields[0]), 2);
    EXPECT_LE(std::abs(cur - prev), 1.05 * slope * h1 * dt);
    prev = cur;
  }
}

TEST(GnRatio, ExponentShiftAndZero) {
  EXPECT_DOUBLE_EQ(gn_exponent(1, 2.0), 10.0 / 3.0);
  EXPECT_DOUBLE_EQ(gn_exponent(3, 2.0), 14.0 / 5.0);
  const GridSpec g{1, 256, 16.0};
  const SpectralField f = rnd(g, 4, 3.0);
  const double a = gn_ratio({f});
  const double b = gn_ratio({shift(f, 0, 37)});
  EXPECT_GT(a, 0.0);
  EXPECT_LT(rel(b, a), 1e-10);
  EXPECT_THROW(gn_ratio({SpectralField(g)}), DomainError);
}

TEST(SupportMonitor, FlagsMassNearBoundary) {
  const GridSpec g{1, 256, 16.0};
  SpectralField centred = sample_field(g, [](const auto& x) { return cplx(std::exp(-x[0] * x[0]), 0.0); });
  EXPECT_FALSE(support_monitor(SystemState{choquard_params(), {centred}, 0.0}).warn);
  SpectralField edge = sample_field(g, [](const auto& x) { return cplx(std::exp(-(x[0] - 15.0) * (x[0] - 15.0)), 0.0); });
  const auto r = support_monitor(SystemState{choquard_params(), {edge}, 0.0});
  EXPECT_TRUE(r.warn);
  EXPECT_GT(r.shell_fraction, 0.5);
}
