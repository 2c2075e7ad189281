#pragma once

// Independent verification machinery. Nothing here is used by the
// optimisation loops; tests and the acceptance suite compare the loops'
// output against these.

#include "ef21/compressors.hpp"
#include "ef21/methods.hpp"
#include "ef21/problems.hpp"
#include "ef21/theory.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace ef21::oracles {

// Central differences with h_k = h_scale (1 + |x_k|).
template <typename F>
Vector finite_diff_gradient(F&& f, const Vector& x, double h_scale = 1e-6) {
  Vector g(x.size());
  Vector probe = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double h = h_scale * (1.0 + std::abs(x[k]));
    probe[k] = x[k] + h;
    const double up = f(probe);
    probe[k] = x[k] - h;
    const double down = f(probe);
    probe[k] = x[k];
    g[k] = (up - down) / (2.0 * h);
  }
  return g;
}

inline double relative_error(const Vector& approx, const Vector& exact) {
  const double denom = std::max(exact.norm(), approx.norm());
  if (denom == 0.0) return 0.0;
  return (approx - exact).norm() / denom;
}

// ---------------------------------------------------------------------------
// EF vs EF21
// ---------------------------------------------------------------------------

struct DeviationReport {
  double max_abs_deviation = 0.0;       // max_t |x_EF^t - x_EF21^t|_inf
  double max_message_deviation = 0.0;   // max_t,i |w_i^t - gamma g_i^t|_inf
  std::optional<std::size_t> first_divergent_round;
  std::size_t rounds_checked = 0;
};

// Runs EF and EF21 (g_i^0 = C(grad f_i(x^0))) side by side and compares the
// iterates and the messages w_i^t against gamma g_i^t. A round counts as
// divergent once either gap exceeds `tolerance`.
inline DeviationReport check_equivalence(const GlobalProblem& gp, const Vector& x0, double gamma,
                                         const Compressor& comp, std::size_t T, double tolerance = 1e-9,
                                         std::uint64_t seed = 0) {
  std::vector<Vector> ef_x, ef21_x;
  std::vector<std::vector<Vector>> ef_w, ef21_g;
  RunHooks ef_hooks;
  ef_hooks.verify = false;
  ef_hooks.observer = [&](std::size_t, const Vector& x, std::span<const WorkerState> ws) {
    ef_x.push_back(x);
    std::vector<Vector> w;
    for (const auto& s : ws) w.push_back(*s.w);
    ef_w.push_back(std::move(w));
  };
  RunHooks ef21_hooks;
  ef21_hooks.verify = false;
  ef21_hooks.observer = [&](std::size_t, const Vector& x, std::span<const WorkerState> ws) {
    ef21_x.push_back(x);
    std::vector<Vector> g;
    for (const auto& s : ws) g.push_back(*s.g);
    ef21_g.push_back(std::move(g));
  };
  run_ef(gp, x0, gamma, comp, T, seed, ef_hooks);
  run_ef21(gp, x0, gamma, comp, T, seed, InitMode::CompressG0, ef21_hooks);

  DeviationReport report;
  const std::size_t rounds = std::min(ef_x.size(), ef21_x.size());
  for (std::size_t t = 0; t < rounds; ++t) {
    const double dx = (ef_x[t] - ef21_x[t]).lpNorm<Eigen::Infinity>();
    double dw = 0.0;
    for (std::size_t i = 0; i < ef_w[t].size(); ++i) {
      dw = std::max(dw, (ef_w[t][i] - gamma * ef21_g[t][i]).lpNorm<Eigen::Infinity>());
    }
    report.max_abs_deviation = std::max(report.max_abs_deviation, dx);
    report.max_message_deviation = std::max(report.max_message_deviation, dw);
    if (!report.first_divergent_round && (dx > tolerance || dw > tolerance)) report.first_divergent_round = t;
  }
  report.rounds_checked = rounds;
  return report;
}

inline DeviationReport check_equivalence(const GlobalProblem& gp, const Vector& x0, double gamma, double c,
                                         std::size_t T, double tolerance = 1e-9) {
  return check_equivalence(gp, x0, gamma, Compressor::scaled_linear(c, gp.dim()), T, tolerance);
}

// ---------------------------------------------------------------------------
// Markov-compressor distortion on a prescribed input sequence
// ---------------------------------------------------------------------------

struct MarkovDistortion {
  std::vector<double> distortion;  // D^t = |M(v^t) - v^t|^2, t = 0..T
  std::vector<double> bound;       // (1-theta)^t D^0 + beta sum_{i<t} (1-theta)^i |v^{t-i} - v^{t-i-1}|^2
  InequalityCheck check;
};

// Feeds v^t = v* + (1 - phi)^t (v^0 - v*) through the Markov compressor and
// checks D^t against the unrolled distortion recursion with theta, beta at
// s*. The bound is only asserted per sample for deterministic compressors.
inline MarkovDistortion markov_distortion_experiment(const Vector& v0, const Vector& v_star, double phi,
                                                     const Compressor& comp, std::size_t T, std::uint64_t seed = 0) {
  if (!(phi > 0.0 && phi < 1.0)) throw ArgumentError("phi must lie in (0, 1)");
  const auto opt = theory::optimal_s(comp.alpha());
  auto input = [&](std::size_t t) -> Vector {
    return v_star + std::pow(1.0 - phi, static_cast<double>(t)) * (v0 - v_star);
  };

  MarkovDistortion out;
  Rng rng = make_stream(seed, 0, 0, StreamPurpose::Oracle);
  Vector v = input(0);
  MarkovState state = markov_init(v, comp, &rng);
  out.distortion.push_back(squared_distance(state.g, v));
  out.bound.push_back(out.distortion.front());

  // bound^{t+1} = (1 - theta) bound^t + beta |v^{t+1} - v^t|^2 unrolls to the closed form above.
  double bound = out.distortion.front();
  for (std::size_t t = 1; t <= T; ++t) {
    Vector next = input(t);
    const double increment = squared_distance(next, v);
    state = markov_step(state, next, comp, &rng).state;
    v = std::move(next);
    bound = (1.0 - opt.theta) * bound + opt.beta * increment;
    const double d = squared_distance(state.g, v);
    out.distortion.push_back(d);
    out.bound.push_back(bound);
    if (comp.deterministic()) out.check.observe(t, d, bound, std::abs(d) + bound);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Convergence-rate checks on recorded traces
// ---------------------------------------------------------------------------

struct BoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

// Nonconvex rate: (1/T) sum_{t<T} |grad f(x^t)|^2 <= 2 (f(x^0) - f_inf)/(gamma T) + G^0/(theta T).
inline BoundCheck nonconvex_rate_check(const RunTrace& trace, double gamma, double theta, double f_inf = 0.0) {
  const std::size_t T = trace.rounds_completed();
  if (T == 0) throw ArgumentError("nonconvex_rate_check needs at least one completed round");
  double acc = 0.0;
  for (std::size_t t = 0; t < T; ++t) acc += trace.records[t].grad_sq_norm;
  const auto& r0 = trace.records.front();
  BoundCheck b;
  b.lhs = acc / static_cast<double>(T);
  b.rhs = 2.0 * (r0.f_value - f_inf) / (gamma * static_cast<double>(T)) + r0.G / (theta * static_cast<double>(T));
  b.holds = b.lhs <= b.rhs;
  return b;
}

struct LinearRateCheck {
  InequalityCheck per_step;  // Psi^{t+1} <= (1 - gamma mu) Psi^t
  BoundCheck final;          // Psi^T <= (1 - gamma mu)^T Psi^0
};

// PL rate on the psi column of a trace. Besides the relative slack, each
// step is allowed the rounding error of forming f(x) - f*, which dominates
// once the gap reaches a few ulps of f*.
inline LinearRateCheck pl_rate_check(const RunTrace& trace, double gamma, double mu, double rel_tol = 1e-10) {
  LinearRateCheck out;
  const double rate = 1.0 - gamma * mu;
  const double psi0 = trace.records.front().psi.value();
  constexpr double eps = std::numeric_limits<double>::epsilon();
  for (std::size_t t = 0; t + 1 < trace.records.size(); ++t) {
    const auto& a = trace.records[t];
    const auto& b = trace.records[t + 1];
    const double now = a.psi.value();
    const double next = b.psi.value();
    const double roundoff = 8.0 * eps * (std::abs(a.f_value) + std::abs(b.f_value));
    const double scale = std::abs(next) + std::abs(now);
    out.per_step.observe(t + 1, next, rate * now + roundoff, scale, rel_tol);
  }
  const double T = static_cast<double>(trace.rounds_completed());
  out.final.lhs = trace.records.back().psi.value();
  out.final.rhs = std::pow(rate, T) * psi0;
  out.final.holds = out.final.lhs <= out.final.rhs;
  return out;
}

}  // namespace ef21::oracles
