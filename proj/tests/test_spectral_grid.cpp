#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <numbers>

#include "schx/field.hpp"
#include "schx/oracle.hpp"
#include "schx/random_field.hpp"
#include "schx/snapshot.hpp"

using namespace schx;

namespace {

double rel_max_err(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num = std::max(num, std::abs(a[i] - b[i]));
    den = std::max(den, std::abs(b[i]));
  }
  return num / den;
}

SpectralField plane_wave(const GridSpec& g, std::array<int, 3> m, double amp = 1.0) {
  return sample_field(g, [&](const std::array<double, 3>& x) {
    double ph = 0.0;
    for (int a = 0; a < g.dim; ++a) ph += std::numbers::pi * m[a] / g.half_length * x[a];
    return amp * cplx(std::cos(ph), std::sin(ph));
  });
}

}  // namespace

TEST(GridSpec, RejectsBadSizes) {
  EXPECT_THROW((GridSpec{1, 6, 1.0}.validate()), DomainError);
  EXPECT_THROW((GridSpec{1, 4, 1.0}.validate()), DomainError);
  EXPECT_THROW((GridSpec{4, 8, 1.0}.validate()), DomainError);
  EXPECT_THROW((GridSpec{1, 8, -1.0}.validate()), DomainError);
  EXPECT_NO_THROW((GridSpec{3, 16, 2.0}.validate()));
}

TEST(GridSpec, SpacingAndVolume) {
  const GridSpec g{2, 32, 5.0};
  EXPECT_DOUBLE_EQ(g.spacing(), 10.0 / 32.0);
  EXPECT_NEAR(g.cell_volume() * static_cast<double>(g.size()), 100.0, 1e-12);
  EXPECT_DOUBLE_EQ(g.coordinate(0), -5.0);
}

TEST(WaveVectors, ZeroAndNyquist) {
  const GridSpec g{1, 16, 3.0};
  const auto w = wave_vectors(g);
  EXPECT_EQ(w->k[0], 0.0);
  int nyquist = 0;
  for (double k : w->k)
    if (std::abs(k + std::numbers::pi * 8 / 3.0) < 1e-12) ++nyquist;
  EXPECT_EQ(nyquist, 1);
  EXPECT_EQ(w->k_odd[8], 0.0);
}

TEST(Transforms, ConstantHasOnlyZeroMode) {
  const GridSpec g{2, 16, 1.0};
  SpectralField f = sample_field(g, [](const auto&) { return cplx(1.0, 0.0); });
  const SpectralField s = to_spectral(f);
  EXPECT_NEAR(std::abs(s.values[0]), 16.0, 1e-12);
  for (std::size_t i = 1; i < s.size(); ++i) EXPECT_LT(std::abs(s.values[i]), 1e-12);
}

TEST(Transforms, PlaneWaveSingleCoefficient) {
  const GridSpec g{1, 32, 2.0};
  const SpectralField s = to_spectral(plane_wave(g, {3, 0, 0}));
  int nonzero = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (std::abs(s.values[i]) > 1e-10) ++nonzero;
  EXPECT_EQ(nonzero, 1);
  EXPECT_GT(std::abs(s.values[3]), 1.0);
}

TEST(Transforms, MatchSlowDftAndRoundTrip) {
  for (int d = 1; d <= 3; ++d) {
    const GridSpec g{d, d == 1 ? std::size_t{16} : std::size_t{8}, 1.5};
    RandomFieldSpec spec;
    spec.max_mode = 3;
    spec.decay = 0.0;
    spec.seed = 11 + d;
    const SpectralField f = random_field(g, spec);
    const SpectralField s = to_spectral(f);
    EXPECT_LT(rel_max_err(s.values, oracle::slow_dft(g, f.values, true)), 1e-12) << "d=" << d;
    EXPECT_LT(rel_max_err(to_physical(s).values, f.values), 1e-12) << "d=" << d;
  }
}

TEST(Transforms, WrongRepresentationThrows) {
  const GridSpec g{1, 8, 1.0};
  SpectralField f(g);
  EXPECT_THROW(to_physical(f), ContractViolation);
  EXPECT_THROW(to_spectral(to_spectral(f)), ContractViolation);
}

TEST(FreePropagate, PlaneWavePhase) {
  const GridSpec g{2, 16, 2.0};
  const SpectralField f = plane_wave(g, {1, -2, 0});
  const double k2 = std::pow(std::numbers::pi / 2.0, 2) * (1 + 4);
  const double t = 0.37;
  const SpectralField out = free_propagate(f, t);
  SpectralField expect = std::polar(1.0, -k2 * t) * f;
  EXPECT_LT(max_abs_diff(out, expect), 1e-12);
  EXPECT_EQ(max_abs_diff(free_propagate(f, 0.0), f), 0.0);
}

TEST(FreePropagate, AnalyticGaussianDispersion) {
  const GridSpec g{1, 512, 40.0};
  const double s2 = 0.25;  // psi0 = exp(-x^2 / (4 s2))
  const SpectralField f = sample_field(g, [&](const auto& x) { return cplx(std::exp(-x[0] * x[0] / (4 * s2)), 0.0); });
  const double t = 1.0;
  const SpectralField out = free_propagate(f, t);
  const cplx s(s2, t);
  double err = 0.0;
  for (std::size_t i = 0; i < g.n; ++i) {
    const double x = g.coordinate(i);
    const cplx exact = std::sqrt(cplx(s2, 0.0) / s) * std::exp(-x * x / (4.0 * s));
    err = std::max(err, std::abs(out.values[i] - exact));
  }
  EXPECT_LE(err, 1e-6);
}

TEST(FreePropagate, InvertibleUnitaryGroupLaw) {
  const GridSpec g{2, 32, 4.0};
  RandomFieldSpec spec;
  spec.max_mode = 6;
  spec.seed = 5;
  const SpectralField f = random_field(g, spec);
  for (double t : {0.1, -0.7, 3.3}) {
    const SpectralField u = free_propagate(f, t);
    EXPECT_LT(max_abs_diff(free_propagate(u, -t), f), 1e-12);
    EXPECT_NEAR(norm_L2(u) / norm_L2(f), 1.0, 1e-12);
    EXPECT_NEAR(norm_H1(u) / norm_H1(f), 1.0, 1e-12);
  }
  const SpectralField a = free_propagate(free_propagate(f, 0.4), 1.1);
  EXPECT_LT(max_abs_diff(a, free_propagate(f, 1.5)), 1e-11);
}

TEST(Derivatives, ConstantAndPlaneWave) {
  const GridSpec g{1, 32, 2.0};
  SpectralField c = sample_field(g, [](const auto&) { return cplx(2.5, -1.0); });
  EXPECT_LT(max_abs(gradient(c)[0]), 1e-13);
  const SpectralField f = plane_wave(g, {3, 0, 0});
  const double k = 3 * std::numbers::pi / 2.0;
  EXPECT_LT(max_abs_diff(gradient(f)[0], cplx(0.0, k) * f), 1e-11);
  EXPECT_LT(max_abs_diff(laplacian(f), cplx(-k * k, 0.0) * f), 1e-10);
}

TEST(Derivatives, SpectralMatchesFiniteDifferenceAtSecondOrder) {
  RandomFieldSpec spec;
  spec.max_mode = 4;
  spec.seed = 21;
  std::vector<double> errs, hs;
  for (std::size_t n : {32u, 64u, 128u, 256u}) {
    const GridSpec g{1, n, 3.0};
    const SpectralField f = random_field(g, spec);
    const SpectralField df = gradient(f)[0];
    const double h = g.spacing();
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const cplx fd = (f.values[(i + 1) % n] - f.values[(i + n - 1) % n]) / (2.0 * h);
      e = std::max(e, std::abs(fd - df.values[i]));
    }
    errs.push_back(e);
    hs.push_back(h);
  }
  for (std::size_t i = 1; i < errs.size(); ++i) {
    const double order = std::log(errs[i - 1] / errs[i]) / std::log(hs[i - 1] / hs[i]);
    EXPECT_GE(order, 1.9);
  }
}

TEST(Norms, ZeroConstantGaussian) {
  const GridSpec g1{1, 512, 20.0};
  SpectralField z(g1);
  for (double r : {1.0, 2.0, 3.5, std::numeric_limits<double>::infinity()}) EXPECT_EQ(norm_Lr(z, r), 0.0);
  const GridSpec g2{2, 16, 1.5};
  SpectralField c = sample_field(g2, [](const auto&) { return cplx(0.0, -2.0); });
  for (double r : {1.0, 2.0, 4.0}) EXPECT_NEAR(norm_Lr(c, r), 2.0 * std::pow(3.0, 2.0 / r), 1e-12);
  EXPECT_DOUBLE_EQ(norm_Lr(c, std::numeric_limits<double>::infinity()), 2.0);
  const SpectralField gauss = sample_field(g1, [](const auto& x) { return cplx(std::exp(-x[0] * x[0]), 0.0); });
  EXPECT_NEAR(std::pow(norm_L2(gauss), 2), std::sqrt(std::numbers::pi / 2.0), 1e-8);
  EXPECT_THROW(norm_Lr(gauss, 0.5), DomainError);
}

TEST(Norms, ParsevalAndH1Decomposition) {
  const GridSpec g{3, 16, 3.0};
  RandomFieldSpec spec;
  spec.max_mode = 5;
  spec.seed = 3;
  const SpectralField f = random_field(g, spec);
  EXPECT_NEAR(norm_L2(to_spectral(f)) / norm_L2(f), 1.0, 1e-12);
  double grad = 0.0;
  for (const auto& d : gradient(f)) grad += std::pow(norm_L2(d), 2);
  EXPECT_NEAR(std::pow(norm_H1(f), 2), std::pow(norm_L2(f), 2) + grad, 1e-10 * std::pow(norm_H1(f), 2));
  EXPECT_NEAR(std::real(inner_L2(f, f)), std::pow(norm_L2(f), 2), 1e-12);
}

TEST(Reductions, IndependentOfWorkerCount) {
  const GridSpec g{2, 128, 3.0};
  RandomFieldSpec spec;
  spec.max_mode = 10;
  spec.seed = 8;
  set_worker_count(1);
  const SpectralField f1 = random_field(g, spec);
  const double a = norm_Lr(f1, 3.0), b = norm_H1(f1);
  set_worker_count(4);
  const SpectralField f4 = random_field(g, spec);
  EXPECT_EQ(norm_Lr(f4, 3.0), a);
  EXPECT_EQ(norm_H1(f4), b);
  set_worker_count(1);
}

TEST(Snapshot, RoundTripIsExact) {
  const GridSpec g{2, 16, 2.5};
  RandomFieldSpec spec;
  spec.seed = 2;
  std::vector<SpectralField> fs{random_field(g, spec)};
  spec.seed = 3;
  fs.push_back(random_field(g, spec));
  const auto path = std::filesystem::temp_directory_path() / "schx_snapshot_test.bin";
  write_snapshot(path.string(), fs, 1.25);
  const Snapshot s = read_snapshot(path.string());
  EXPECT_EQ(s.grid, g);
  EXPECT_EQ(s.time, 1.25);
  ASSERT_EQ(s.fields.size(), 2u);
  for (int j = 0; j < 2; ++j) EXPECT_EQ(s.fields[j].values, fs[j].values);
  std::filesystem::remove(path);
}
