#pragma once

// Strang splitting: half free flow, nonlinear flow over dt, half free flow.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "schx/errors.hpp"
#include "schx/model.hpp"

namespace schx {

enum class SubstepScheme { frozen_potential_exact_phase, rk4_nonlinear };

inline std::string scheme_name(SubstepScheme s) {
  return s == SubstepScheme::frozen_potential_exact_phase ? "frozen_potential_exact_phase" : "rk4_nonlinear";
}

struct StepPlan {
  double dt = 1e-3;
  SubstepScheme scheme = SubstepScheme::frozen_potential_exact_phase;
  int steps_per_diagnostic = 1;
  double stability_guard = 0.5;  // bound on |dt| * max potential
};

/// Largest local rate of the nonlinear flow: V_j |psi_j|^{p-2} + beta D.
inline double potential_magnitude(const SystemState& s, const NonlocalPotentials& P) {
  double m = 0.0;
  const double e = s.params.p - 2.0;
  for (int j = 0; j < s.size(); ++j) {
    const SpectralField f = as_physical(s.fields[j]);
    for (std::size_t i = 0; i < f.size(); ++i) {
      double v = std::abs(P.V[j][i]) * abs_pow(std::abs(f.values[i]), e);
      if (s.params.beta != 0.0) v += s.params.beta * std::abs(P.D[i]);
      m = std::max(m, v);
    }
  }
  return m;
}

namespace detail {

inline void guard(const SystemState& s, const NonlocalPotentials& P, double dt, double bound) {
  const double product = std::abs(dt) * potential_magnitude(s, P);
  if (product > bound)
    throw StabilityError("stability guard violated: |dt| * max|V| = " + std::to_string(product) +
                             " > " + std::to_string(bound), product);
}

inline void phase_rotation(SystemState& s, double dt, double bound) {
  if (s.params.beta != 0.0)
    throw ContractViolation("frozen_potential_exact_phase cannot integrate the exchange term; use rk4_nonlinear");
  const NonlocalPotentials P = nonlocal_potentials(s, false);
  guard(s, P, dt, bound);
  const double e = s.params.p - 2.0;
  for (int j = 0; j < s.size(); ++j) {
    SpectralField& f = s.fields[j];
    f = as_physical(f);
    const auto& V = P.V[j];
    parallel_for(f.size(), [&](std::size_t i) {
      const double rate = V[i] * abs_pow(std::abs(f.values[i]), e);
      f.values[i] *= std::polar(1.0, -dt * rate);
    });
  }
}

/// k = -i G(y)
inline std::vector<SpectralField> rk_rate(const SystemState& y) {
  auto G = nonlinearity(y, nonlocal_potentials(y));
  for (auto& g : G)
    parallel_for(g.size(), [&](std::size_t i) { g.values[i] *= cplx(0.0, -1.0); });
  return G;
}

inline SystemState rk_stage(const SystemState& base, const std::vector<SpectralField>& k, double h) {
  SystemState y = base;
  for (int j = 0; j < y.size(); ++j) {
    auto& v = y.fields[j].values;
    const auto& kv = k[j].values;
    parallel_for(v.size(), [&](std::size_t i) { v[i] += h * kv[i]; });
  }
  return y;
}

inline void rk4(SystemState& s, double dt, double bound) {
  for (auto& f : s.fields) f = as_physical(f);
  guard(s, nonlocal_potentials(s), dt, bound);
  const auto k1 = rk_rate(s);
  const auto k2 = rk_rate(rk_stage(s, k1, 0.5 * dt));
  const auto k3 = rk_rate(rk_stage(s, k2, 0.5 * dt));
  const auto k4 = rk_rate(rk_stage(s, k3, dt));
  for (int j = 0; j < s.size(); ++j) {
    auto& v = s.fields[j].values;
    parallel_for(v.size(), [&](std::size_t i) {
      v[i] += (dt / 6.0) * (k1[j].values[i] + 2.0 * k2[j].values[i] + 2.0 * k3[j].values[i] + k4[j].values[i]);
    });
  }
}

}  // namespace detail

/// One Strang step; dt may be negative (backward step).
inline SystemState strang_step(const SystemState& state, const StepPlan& plan) {
  if (plan.dt == 0.0 || !std::isfinite(plan.dt)) throw ContractViolation("step size must be finite and nonzero");
  check_state(state);
  SystemState s = state;
  for (auto& f : s.fields) f = as_physical(free_propagate(f, 0.5 * plan.dt));
  if (plan.scheme == SubstepScheme::frozen_potential_exact_phase)
    detail::phase_rotation(s, plan.dt, plan.stability_guard);
  else
    detail::rk4(s, plan.dt, plan.stability_guard);
  for (auto& f : s.fields) f = as_physical(free_propagate(f, 0.5 * plan.dt));
  for (int j = 0; j < s.size(); ++j) check_finite(s.fields[j], j);
  s.time = state.time + plan.dt;
  return s;
}

using DiagnosticSink = std::function<void(const SystemState&, long long step)>;

struct RunHooks {
  std::vector<DiagnosticSink> sinks;
  long long checkpoint_every = 0;  // 0 disables
  std::function<void(const SystemState&, long long step)> checkpoint;
  bool emit_initial = true;         // false when resuming: the row already exists
  long long first_step = 0;         // step index of the incoming state
};

inline long long steps_to(double t_from, double t_final, double dt) {
  return std::llround((t_final - t_from) / dt);
}

/// Iterates strang_step up to t_final; sinks see every steps_per_diagnostic-th state.
inline SystemState run(SystemState state, const StepPlan& plan, double t_final, const RunHooks& hooks = {}) {
  if (!(plan.dt > 0.0)) throw ContractViolation("run: dt must be positive");
  if (plan.steps_per_diagnostic < 1) throw ContractViolation("run: steps_per_diagnostic must be >= 1");
  if (t_final < state.time) throw ContractViolation("run: t_final precedes the current time");
  const long long total = steps_to(state.time, t_final, plan.dt);
  long long step = hooks.first_step;
  auto emit = [&](const SystemState& s) {
    for (const auto& sink : hooks.sinks) sink(s, step);
  };
  if (hooks.emit_initial && step % plan.steps_per_diagnostic == 0) emit(state);
  for (long long i = 0; i < total; ++i) {
    state = strang_step(state, plan);
    ++step;
    if (step % plan.steps_per_diagnostic == 0) emit(state);
    if (hooks.checkpoint && hooks.checkpoint_every > 0 && step % hooks.checkpoint_every == 0)
      hooks.checkpoint(state, step);
  }
  return state;
}

}  // namespace schx
