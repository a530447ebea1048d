#pragma once

// Strichartz admissibility in exact rational arithmetic, L^r decay series with
// dyadic windows, and the free-pullback Cauchy test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "schx/model.hpp"

namespace schx {

/// Extended non-negative rational: num/den in lowest terms, or +infinity.
class Rational {
 public:
  using Int = __int128;

  Rational() = default;
  Rational(long long n, long long d = 1) : num_(n), den_(d) { normalize(); }
  static Rational infinity() {
    Rational r;
    r.inf_ = true;
    return r;
  }

  /// Continued-fraction recovery of a double, exact for ratios with small denominators.
  static Rational from_double(double x, long long max_den = 1000000) {
    if (std::isinf(x)) {
      if (x < 0) throw DomainError("rational: -infinity not representable");
      return infinity();
    }
    if (!std::isfinite(x)) throw DomainError("rational: NaN");
    const bool neg = x < 0;
    double v = std::abs(x);
    long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    for (int it = 0; it < 64; ++it) {
      const double a = std::floor(v);
      const long long ai = static_cast<long long>(a);
      const long long p2 = ai * p1 + p0, q2 = ai * q1 + q0;
      if (q2 > max_den) break;
      p0 = p1;
      q0 = q1;
      p1 = p2;
      q1 = q2;
      const double frac = v - a;
      if (frac < 1e-12 || std::abs(static_cast<double>(p1) / static_cast<double>(q1) - std::abs(x)) <= 1e-14 * std::abs(x))
        break;
      v = 1.0 / frac;
    }
    if (q1 == 0) throw DomainError("rational: value too large");
    return Rational(neg ? -p1 : p1, q1);
  }

  bool is_infinite() const noexcept { return inf_; }
  Int num() const noexcept { return num_; }
  Int den() const noexcept { return den_; }
  double to_double() const {
    return inf_ ? std::numeric_limits<double>::infinity() : static_cast<double>(num_) / static_cast<double>(den_);
  }
  std::string str() const {
    if (inf_) return "inf";
    std::string s = std::to_string(static_cast<long long>(num_));
    if (den_ != 1) s += "/" + std::to_string(static_cast<long long>(den_));
    return s;
  }

  /// 1/x with 1/0 = inf and 1/inf = 0.
  Rational reciprocal() const {
    if (inf_) return Rational(0);
    if (num_ == 0) return infinity();
    Rational r;
    r.num_ = den_;
    r.den_ = num_;
    r.normalize();
    return r;
  }

  friend Rational operator+(const Rational& a, const Rational& b) {
    if (a.inf_ || b.inf_) return infinity();
    return make(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
  }
  friend Rational operator-(const Rational& a, const Rational& b) {
    if (a.inf_ || b.inf_) throw DomainError("rational: subtraction with infinity");
    return make(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
  }
  friend Rational operator*(const Rational& a, const Rational& b) {
    if (a.inf_ || b.inf_) {
      if ((!a.inf_ && a.num_ == 0) || (!b.inf_ && b.num_ == 0)) throw DomainError("rational: 0 * infinity");
      return infinity();
    }
    return make(a.num_ * b.num_, a.den_ * b.den_);
  }
  friend Rational operator/(const Rational& a, const Rational& b) { return a * b.reciprocal(); }
  friend bool operator==(const Rational& a, const Rational& b) {
    if (a.inf_ || b.inf_) return a.inf_ == b.inf_;
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator<(const Rational& a, const Rational& b) {
    if (a.inf_) return false;
    if (b.inf_) return true;
    return a.num_ * b.den_ < b.num_ * a.den_;
  }
  friend bool operator<=(const Rational& a, const Rational& b) { return a < b || a == b; }

 private:
  static Rational make(Int n, Int d) {
    Rational r;
    r.num_ = n;
    r.den_ = d;
    r.normalize();
    return r;
  }
  static Int gcd(Int a, Int b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
      const Int t = a % b;
      a = b;
      b = t;
    }
    return a;
  }
  void normalize() {
    if (den_ == 0) throw DomainError("rational: zero denominator");
    if (den_ < 0) {
      den_ = -den_;
      num_ = -num_;
    }
    const Int g = gcd(num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
  }

  Int num_ = 0;
  Int den_ = 1;
  bool inf_ = false;
};

struct AdmissiblePair {
  Rational q, r;
  int d = 1;
};

/// 2/q + d/r = d/2 exactly, q, r >= 2, (q, r, d) != (2, inf, 2).
inline bool is_admissible(const Rational& q, const Rational& r, int d) {
  if (d < 1) throw DomainError("admissibility: d must be >= 1");
  if (q < Rational(2) || r < Rational(2)) throw DomainError("admissibility: q and r must be >= 2");
  if (d == 2 && q == Rational(2) && r.is_infinite()) return false;
  return Rational(2) * q.reciprocal() + Rational(d) * r.reciprocal() == Rational(d, 2);
}

inline bool is_admissible(const AdmissiblePair& p) { return is_admissible(p.q, p.r, p.d); }

struct ScatteringPairs {
  AdmissiblePair first;   // (4p/(dp-d-g1), 2dp/(d+g1))
  AdmissiblePair second;  // (8/(d-g1), 4d/(d+g1))
};

/// Both Strichartz pairs used in the scattering argument. Refuses when the
/// coupling violates a model constraint or a formula leaves the admissible range.
inline ScatteringPairs scattering_pairs(const CouplingParams& c, int d) {
  validate(c, GridSpec{d, 8, 1.0});
  const Rational p = Rational::from_double(c.p), g = Rational::from_double(c.gamma1), D(d);
  std::vector<std::string> bad;
  const Rational den1 = D * p - D - g;
  const Rational den2 = D - g;
  if (!(Rational(0) < den1)) bad.push_back("q₁ = 4p/(dp−d−γ₁) needs dp−d−γ₁ > 0");
  if (!(Rational(0) < den2)) bad.push_back("q₂ = 8/(d−γ₁) needs γ₁ < d");
  if (!bad.empty()) throw ValidationError(bad);
  ScatteringPairs out;
  out.first = AdmissiblePair{Rational(4) * p / den1, Rational(2) * D * p / (D + g), d};
  out.second = AdmissiblePair{Rational(8) / den2, Rational(4) * D / (D + g), d};
  for (const auto* pr : {&out.first, &out.second}) {
    if (pr->q < Rational(2) || pr->r < Rational(2))
      bad.push_back("pair (" + pr->q.str() + ", " + pr->r.str() + ") has an exponent below 2");
  }
  if (!bad.empty()) throw ValidationError(bad);
  if (!is_admissible(out.first) || !is_admissible(out.second))
    throw NumericalError("scattering pair failed the admissibility identity", -1);
  return out;
}

/// Whether r lies in the decay theorem's range for dimension d.
inline bool decay_exponent_in_range(double r, int d) {
  if (!(r > 2.0)) return false;
  if (d == 1) return true;
  if (d == 2) return std::isfinite(r);
  return r <= 2.0 * d / (d - 2.0);
}

/// sum_j ||psi_j||_{L^r}; r = inf uses the grid max-modulus (a lower bound of the true sup).
inline double component_norm_sum(const SystemState& s, double r) {
  double v = 0.0;
  for (const auto& f : s.fields) v += norm_Lr(f, r);
  return v;
}

struct DecaySeries {
  double exponent = 2.0;
  std::vector<double> times;
  std::vector<double> values;
};

class DecayTracker {
 public:
  explicit DecayTracker(std::vector<double> exponents) {
    for (double r : exponents) {
      if (!(r >= 2.0)) throw DomainError("decay tracker: exponent must be >= 2");
      series_.push_back(DecaySeries{r, {}, {}});
    }
  }

  void record(const SystemState& s) {
    for (auto& sr : series_) {
      if (!sr.times.empty() && !(s.time > sr.times.back()))
        throw ContractViolation("decay tracker: times must increase");
      sr.times.push_back(s.time);
      sr.values.push_back(component_norm_sum(s, sr.exponent));
    }
  }

  const std::vector<DecaySeries>& series() const noexcept { return series_; }

 private:
  std::vector<DecaySeries> series_;
};

/// max of the series over samples with t in [T, 2T]; nullopt if the window is empty.
inline std::optional<double> windowed_sup(const DecaySeries& s, double T) {
  std::optional<double> best;
  for (std::size_t i = 0; i < s.times.size(); ++i)
    if (s.times[i] >= T && s.times[i] <= 2.0 * T) best = std::max(best.value_or(s.values[i]), s.values[i]);
  return best;
}

/// Window starts T_k = base 2^k with 2 T_k <= t_wrap.
inline std::vector<double> dyadic_windows(double base, double t_wrap) {
  if (!(base > 0.0)) throw DomainError("dyadic windows: base must be > 0");
  std::vector<double> out;
  for (double T = base; 2.0 * T <= t_wrap * (1.0 + 1e-12); T *= 2.0) out.push_back(T);
  return out;
}

/// True when each of the last `count` values is strictly below its predecessor.
inline bool strictly_decreasing_tail(const std::vector<double>& v, std::size_t count = 3) {
  if (v.size() < count + 1) return false;
  for (std::size_t i = v.size() - count; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

struct WindowReport {
  std::vector<double> starts;
  std::vector<double> values;
  bool decreasing = false;
};

inline WindowReport decay_window_report(const DecaySeries& s, const std::vector<double>& starts, std::size_t count = 3) {
  WindowReport r;
  for (double T : starts) {
    const auto v = windowed_sup(s, T);
    if (!v) break;
    r.starts.push_back(T);
    r.values.push_back(*v);
  }
  r.decreasing = strictly_decreasing_tail(r.values, count);
  return r;
}

/// psi~_j(t) = e^{-it Delta} psi_j(t), exact on the torus.
inline std::vector<SpectralField> free_pullback(const SystemState& s) {
  std::vector<SpectralField> out;
  for (const auto& f : s.fields) out.push_back(free_propagate(f, -s.time));
  return out;
}

/// sum_j ||a_j - b_j||_{H^1}
inline double cauchy_h1(const std::vector<SpectralField>& a, const std::vector<SpectralField>& b) {
  if (a.size() != b.size()) throw ContractViolation("cauchy_h1: component counts differ");
  double v = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) v += norm_H1(a[j] - b[j]);
  return v;
}

/// sum_j ||psi_j(t) - e^{it Delta} candidate_j||_{H^1}
inline double free_gap(const SystemState& s, const std::vector<SpectralField>& candidate) {
  std::vector<SpectralField> moved;
  for (const auto& f : candidate) moved.push_back(free_propagate(f, s.time));
  return cauchy_h1(s.fields, moved);
}

/// Captures pullbacks at the first sample at or after each dyadic time.
class CauchyTracker {
 public:
  explicit CauchyTracker(std::vector<double> times) : times_(std::move(times)) {}

  void record(const SystemState& s) {
    while (next_ < times_.size() && s.time >= times_[next_] - 1e-12) {
      captured_.push_back(free_pullback(s));
      at_.push_back(s.time);
      ++next_;
    }
  }

  /// cauchy_h1 between consecutive captured dyadic times.
  std::vector<double> increments() const {
    std::vector<double> v;
    for (std::size_t i = 1; i < captured_.size(); ++i) v.push_back(cauchy_h1(captured_[i - 1], captured_[i]));
    return v;
  }
  const std::vector<double>& capture_times() const noexcept { return at_; }
  const std::vector<SpectralField>* last() const { return captured_.empty() ? nullptr : &captured_.back(); }

 private:
  std::vector<double> times_;
  std::size_t next_ = 0;
  std::vector<std::vector<SpectralField>> captured_;
  std::vector<double> at_;
};

/// Hölder interpolation ||f||_r <= ||f||_2^{1-theta} ||f||_{r2}^theta, 2 < r < r2.
/// Returns the relative slack (>= 0 when it holds).
inline double interpolation_slack(const SpectralField& f, double r, double r2) {
  if (!(2.0 < r && r < r2)) throw DomainError("interpolation: need 2 < r < r2");
  const double inv2 = std::isinf(r2) ? 0.0 : 1.0 / r2;
  const double theta = (0.5 - 1.0 / r) / (0.5 - inv2);
  const double lhs = norm_Lr(f, r);
  const double rhs = std::pow(norm_L2(f), 1.0 - theta) * std::pow(norm_Lr(f, r2), theta);
  return rhs > 0.0 ? (rhs - lhs) / rhs : 0.0;
}

/// Pre-wrap horizon (L - R) / (2 K): R bounds the radius holding all but `tail`
/// of the mass, K the wave number holding all but `tail` of the spectral mass,
/// and 2K is the fastest group velocity for e^{-i|k|^2 t}.
inline double wrap_time_estimate(const SystemState& s, double tail = 1e-6) {
  const GridSpec& g = s.grid();
  const auto w = wave_vectors(g);
  std::vector<std::pair<double, double>> kr, xr;
  double total = 0.0;
  for (const auto& f : s.fields) {
    const SpectralField sp = as_spectral(f);
    const SpectralField ph = as_physical(f);
    for (std::size_t i = 0; i < g.size(); ++i) {
      kr.emplace_back(std::sqrt(w->k2[i]), std::norm(sp.values[i]));
      const auto x = g.position(i);
      double r2 = 0.0;
      for (int a = 0; a < g.dim; ++a) r2 += x[a] * x[a];
      xr.emplace_back(std::sqrt(r2), std::norm(ph.values[i]));
      total += std::norm(ph.values[i]);
    }
  }
  if (!(total > 0.0)) return std::numeric_limits<double>::infinity();
  auto radius = [&](std::vector<std::pair<double, double>>& v) {
    std::sort(v.begin(), v.end());
    double outside = 0.0;
    for (std::size_t i = v.size(); i-- > 0;) {
      outside += v[i].second;
      if (outside > tail * total) return v[i].first;
    }
    return 0.0;
  };
  const double K = radius(kr), R = radius(xr);
  if (K == 0.0) return std::numeric_limits<double>::infinity();
  return std::max(0.0, g.half_length - R) / (2.0 * K);
}

}  // namespace schx
