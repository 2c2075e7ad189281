#pragma once

// The optimisation loops: GD, DCGD, classical EF, EF21, EF21+ and the
// stochastic-gradient EF21. Every loop records one RoundRecord per round
// (t = 0..T) and, unless disabled, checks the per-step inequalities the
// convergence theory rests on:
//
//   descent lemma  f(x+) <= f(x) - (gamma/2)|grad f|^2 - (1/(2 gamma) - L/2)|x+ - x|^2
//                           + (gamma/2)|g - grad f|^2
//   distortion     G+ <= (1 - theta) G + beta (1/n) sum_i |grad f_i(x+) - grad f_i(x)|^2
//                  (EF21 family, deterministic compressor, theta/beta at s*)
//
// Aggregation is sequential in worker order so results are bitwise
// reproducible for a fixed seed.

#include "ef21/accounting.hpp"
#include "ef21/compressors.hpp"
#include "ef21/core.hpp"
#include "ef21/problems.hpp"
#include "ef21/theory.hpp"

#include <json.hpp>

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ef21 {

enum class Method { GD, DCGD, EF, EF21, EF21Plus, EF21SGD };
enum class InitMode { CompressG0, ExactG0 };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::GD: return "gd";
    case Method::DCGD: return "dcgd";
    case Method::EF: return "ef";
    case Method::EF21: return "ef21";
    case Method::EF21Plus: return "ef21_plus";
    case Method::EF21SGD: return "ef21_sgd";
  }
  return "unknown";
}

inline std::string to_string(InitMode m) { return m == InitMode::CompressG0 ? "compress_g0" : "exact_g0"; }

// Per-worker memory. Only the fields the active method uses are engaged:
// g for the EF21 family, e and w for EF.
struct WorkerState {
  std::optional<Vector> g;
  std::optional<Vector> e;
  std::optional<Vector> w;
};

struct RoundRecord {
  std::size_t t = 0;
  double f_value = 0.0;
  double grad_sq_norm = 0.0;
  double G = 0.0;
  double bits_per_client_cum = 0.0;
  std::optional<double> dcgd_fraction;  // EF21+ only
  std::optional<double> psi;            // when f* is known

  bool operator==(const RoundRecord&) const = default;
};

// Tally of one inequality lhs <= rhs checked every round with slack
// rel_tol * scale for floating-point round-off.
struct InequalityCheck {
  std::size_t checked = 0;
  std::size_t violations = 0;
  double worst_excess = -std::numeric_limits<double>::infinity();  // max (lhs - rhs) / scale
  std::optional<std::size_t> first_violation;

  void observe(std::size_t round, double lhs, double rhs, double scale, double rel_tol = 1e-10) {
    ++checked;
    const double s = std::max(scale, std::numeric_limits<double>::min());
    worst_excess = std::max(worst_excess, (lhs - rhs) / s);
    if (!(lhs <= rhs + rel_tol * s)) {
      ++violations;
      if (!first_violation) first_violation = round;
    }
  }

  bool ok() const noexcept { return violations == 0; }
};

struct RunChecks {
  InequalityCheck descent;
  InequalityCheck distortion;          // EF21 family with a deterministic compressor
  InequalityCheck master_consistency;  // incremental master average vs. direct average
};

struct RunTrace {
  std::vector<RoundRecord> records;
  nlohmann::json config_echo;
  Vector final_x;
  RunChecks checks;
  bool diverged = false;

  std::size_t rounds_completed() const noexcept { return records.empty() ? 0 : records.size() - 1; }
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t round, RunTrace trace)
      : std::runtime_error("iterate diverged at round " + std::to_string(round)), round_(round),
        trace_(std::move(trace)) {}
  std::size_t round() const noexcept { return round_; }
  const RunTrace& trace() const noexcept { return trace_; }

 private:
  std::size_t round_;
  RunTrace trace_;
};

using RoundObserver = std::function<void(std::size_t t, const Vector& x, std::span<const WorkerState> workers)>;

struct RunHooks {
  RoundObserver observer;           // called after every recorded round
  bool verify = true;               // per-step inequality checks
  bool allow_randomized_plus = false;  // EF21+ with a randomized compressor (unanalysed)
};

namespace detail {

struct Evaluation {
  double f = 0.0;
  std::vector<Vector> grads;
  Vector full_grad;
  double grad_sq = 0.0;
};

inline Evaluation evaluate(const GlobalProblem& gp, const Vector& x) {
  Evaluation ev;
  ev.grads.reserve(gp.size());
  double f = 0.0;
  for (const auto& c : gp.clients()) {
    auto [fi, gi] = c.value_and_gradient(x);
    f += fi;
    ev.grads.push_back(std::move(gi));
  }
  ev.f = f / static_cast<double>(gp.size());
  ev.full_grad = ordered_mean(ev.grads);
  ev.grad_sq = ev.full_grad.squaredNorm();
  return ev;
}

// (1/n) sum_i |estimate_i - grad_i|^2
inline double mean_sq_error(const std::vector<Vector>& estimates, const std::vector<Vector>& grads) {
  double acc = 0.0;
  for (std::size_t i = 0; i < grads.size(); ++i) acc += squared_distance(estimates[i], grads[i]);
  return acc / static_cast<double>(grads.size());
}

inline double mean_sq_change(const std::vector<Vector>& before, const std::vector<Vector>& after) {
  return mean_sq_error(after, before);
}

// (1/n) sum_i scale * v_i, the quantity every method subtracts from x.
inline Vector scaled_mean(const std::vector<Vector>& parts, double scale) {
  Vector acc = Vector::Zero(parts.front().size());
  for (const auto& p : parts) acc += scale * p;
  return acc / static_cast<double>(parts.size());
}

inline Vector plain_mean(const std::vector<Vector>& parts) {
  Vector acc = Vector::Zero(parts.front().size());
  for (const auto& p : parts) acc += p;
  return acc / static_cast<double>(parts.size());
}

// Shared bookkeeping: metrics, inequality checks, divergence detection.
class Engine {
 public:
  Engine(const GlobalProblem& gp, Method method, double gamma, const Compressor& comp, std::size_t T,
         std::uint64_t seed, const RunHooks& hooks)
      : gp_(gp), gamma_(gamma), comp_(comp), hooks_(hooks), bits_(bits_per_round(comp, gp.dim())),
        theta_(theory::optimal_s(comp.alpha()).theta), beta_(theory::optimal_s(comp.alpha()).beta) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ArgumentError("stepsize must be positive and finite");
    if (comp.dim() != gp.dim()) throw ArgumentError("compressor dimension does not match the problem");
    trace_.records.reserve(T + 1);
    trace_.config_echo = {{"method", to_string(method)}, {"gamma", gamma}, {"T", T},
                          {"seed", seed}, {"compressor", comp.describe()}};
  }

  Evaluation evaluate(const Vector& x) const { return detail::evaluate(gp_, x); }

  double theta() const noexcept { return theta_; }

  void record(std::size_t t, const Vector& x, const Evaluation& ev, double G, std::optional<double> dcgd_fraction,
              std::span<const WorkerState> workers = {}) {
    if (t == 0) f0_ = ev.f;
    RoundRecord r;
    r.t = t;
    r.f_value = ev.f;
    r.grad_sq_norm = ev.grad_sq;
    r.G = G;
    r.bits_per_client_cum = static_cast<double>(t) * bits_;
    r.dcgd_fraction = dcgd_fraction;
    if (gp_.f_star_estimate) r.psi = theory::lyapunov_unclamped(ev.f - *gp_.f_star_estimate, G, gamma_, theta_);
    trace_.records.push_back(r);
    if (hooks_.observer) hooks_.observer(t, x, workers);
  }

  // Throws DivergenceError (with the records so far) when x_new is unusable:
  // a non-finite coordinate or value, or f > 1e12 (1 + f(x^0)).
  void guard(std::size_t round, const Vector& x_new, const Evaluation& ev) {
    const bool bad = !all_finite(x_new) || !std::isfinite(ev.f) || !all_finite(ev.full_grad) ||
                     ev.f > 1e12 * (1.0 + std::abs(f0_));
    if (!bad) return;
    trace_.diverged = true;
    trace_.final_x = x_new;
    throw DivergenceError(round, std::move(trace_));
  }

  void check_descent(std::size_t round, const Vector& x, const Vector& x_new, const Evaluation& ev,
                     const Evaluation& ev_new, const Vector& direction) {
    if (!hooks_.verify) return;
    const double step_sq = squared_distance(x_new, x);
    const double err_sq = squared_distance(direction, ev.full_grad);
    const double curvature = 1.0 / (2.0 * gamma_) - gp_.L() / 2.0;
    const double rhs = ev.f - gamma_ / 2.0 * ev.grad_sq - curvature * step_sq + gamma_ / 2.0 * err_sq;
    const double scale = std::abs(ev.f) + std::abs(ev_new.f) + gamma_ / 2.0 * ev.grad_sq +
                         std::abs(curvature) * step_sq + gamma_ / 2.0 * err_sq;
    trace_.checks.descent.observe(round, ev_new.f, rhs, scale);
  }

  void check_distortion(std::size_t round, double G, double G_new, const Evaluation& ev, const Evaluation& ev_new) {
    if (!hooks_.verify || !comp_.deterministic()) return;
    const double drift = mean_sq_change(ev.grads, ev_new.grads);
    const double rhs = (1.0 - theta_) * G + beta_ * drift;
    trace_.checks.distortion.observe(round, G_new, rhs, std::abs(G_new) + (1.0 - theta_) * G + beta_ * drift);
  }

  void check_master(std::size_t round, const Vector& incremental, const Vector& direct, double scale) {
    if (!hooks_.verify) return;
    const double gap = (incremental - direct).lpNorm<Eigen::Infinity>();
    trace_.checks.master_consistency.observe(round, gap, 0.0, scale, 1e-12);
  }

  RunTrace finish(Vector x) {
    trace_.final_x = std::move(x);
    return std::move(trace_);
  }

 private:
  const GlobalProblem& gp_;
  double gamma_;
  const Compressor& comp_;
  const RunHooks& hooks_;
  double bits_;
  double theta_;
  double beta_;
  double f0_ = 0.0;
  RunTrace trace_;
};

inline void require_x0(const GlobalProblem& gp, const Vector& x0) {
  if (static_cast<std::size_t>(x0.size()) != gp.dim()) throw ArgumentError("x0 has the wrong dimension");
}

inline std::vector<WorkerState> g_states(const std::vector<Vector>& g) {
  std::vector<WorkerState> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out[i].g = g[i];
  return out;
}

// The EF21 loop shared by run_ef21 and run_ef21_sgd. With batch_size == 0
// the workers use exact gradients.
inline RunTrace ef21_loop(Method method, const GlobalProblem& gp, const Vector& x0, double gamma,
                          const Compressor& comp, std::size_t T, std::uint64_t seed, InitMode init,
                          std::size_t batch_size, const RunHooks& hooks) {
  require_x0(gp, x0);
  const std::size_t n = gp.size();
  Engine eng(gp, method, gamma, comp, T, seed, hooks);
  const bool stochastic = batch_size != 0;

  auto local_gradients = [&](const Vector& x, const Evaluation& ev, std::size_t round) {
    if (!stochastic) return ev.grads;
    std::vector<Vector> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      Rng rng = make_stream(seed, i, round, StreamPurpose::Sampling);
      out.push_back(gp.clients()[i].stochastic_gradient(x, batch_size, rng));
    }
    return out;
  };

  Vector x = x0;
  Evaluation ev = eng.evaluate(x);
  std::vector<Vector> g(n);
  {
    const auto local = local_gradients(x, ev, 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (init == InitMode::ExactG0) {
        g[i] = local[i];
      } else {
        Rng rng = make_stream(seed, i, 0);
        g[i] = markov_init(local[i], comp, &rng).g;
      }
    }
  }
  Vector master = plain_mean(g);
  double master_scale = master.lpNorm<Eigen::Infinity>();
  double G = mean_sq_error(g, ev.grads);
  eng.record(0, x, ev, G, std::nullopt, hooks.observer ? g_states(g) : std::vector<WorkerState>{});

  std::vector<Vector> payload(n);
  for (std::size_t t = 0; t < T; ++t) {
    const Vector direction = plain_mean(g);
    Vector x_new = x - scaled_mean(g, gamma);
    Evaluation ev_new = eng.evaluate(x_new);
    eng.guard(t, x_new, ev_new);

    const auto local = local_gradients(x_new, ev_new, t + 1);
    for (std::size_t i = 0; i < n; ++i) {
      Rng rng = make_stream(seed, i, t + 1);
      auto up = markov_step(MarkovState{g[i]}, local[i], comp, &rng);
      g[i] = std::move(up.state.g);
      payload[i] = std::move(up.payload);
    }
    const Vector mean_payload = plain_mean(payload);
    master += mean_payload;
    master_scale += master.lpNorm<Eigen::Infinity>() + mean_payload.lpNorm<Eigen::Infinity>();
    eng.check_master(t + 1, master, plain_mean(g), master_scale);

    const double G_new = mean_sq_error(g, ev_new.grads);
    eng.check_descent(t + 1, x, x_new, ev, ev_new, direction);
    if (!stochastic) eng.check_distortion(t + 1, G, G_new, ev, ev_new);
    eng.record(t + 1, x_new, ev_new, G_new, std::nullopt, hooks.observer ? g_states(g) : std::vector<WorkerState>{});

    x = std::move(x_new);
    ev = std::move(ev_new);
    G = G_new;
  }
  auto trace = eng.finish(std::move(x));
  trace.config_echo["init"] = to_string(init);
  if (stochastic) trace.config_echo["batch_size"] = batch_size;
  return trace;
}

}  // namespace detail

// x+ = x - gamma (1/n) sum_i grad f_i(x).
inline RunTrace run_gd(const GlobalProblem& gp, const Vector& x0, double gamma, std::size_t T,
                       const RunHooks& hooks = {}) {
  detail::require_x0(gp, x0);
  const auto comp = Compressor::identity(gp.dim());
  detail::Engine eng(gp, Method::GD, gamma, comp, T, 0, hooks);
  Vector x = x0;
  auto ev = eng.evaluate(x);
  eng.record(0, x, ev, 0.0, std::nullopt);
  for (std::size_t t = 0; t < T; ++t) {
    Vector x_new = x - detail::scaled_mean(ev.grads, gamma);
    auto ev_new = eng.evaluate(x_new);
    eng.guard(t, x_new, ev_new);
    eng.check_descent(t + 1, x, x_new, ev, ev_new, ev.full_grad);
    eng.record(t + 1, x_new, ev_new, 0.0, std::nullopt);
    x = std::move(x_new);
    ev = std::move(ev_new);
  }
  return eng.finish(std::move(x));
}

// x+ = x - (gamma/n) sum_i C(grad f_i(x)), fresh compression every round.
inline RunTrace run_dcgd(const GlobalProblem& gp, const Vector& x0, double gamma, const Compressor& comp,
                         std::size_t T, std::uint64_t seed, const RunHooks& hooks = {}) {
  detail::require_x0(gp, x0);
  const std::size_t n = gp.size();
  detail::Engine eng(gp, Method::DCGD, gamma, comp, T, seed, hooks);
  auto compress_all = [&](const detail::Evaluation& ev, std::size_t round) {
    std::vector<Vector> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      Rng rng = make_stream(seed, i, round);
      out[i] = comp(ev.grads[i], &rng);
    }
    return out;
  };
  Vector x = x0;
  auto ev = eng.evaluate(x);
  auto msgs = compress_all(ev, 0);
  eng.record(0, x, ev, detail::mean_sq_error(msgs, ev.grads), std::nullopt);
  for (std::size_t t = 0; t < T; ++t) {
    Vector x_new = x - detail::scaled_mean(msgs, gamma);
    auto ev_new = eng.evaluate(x_new);
    eng.guard(t, x_new, ev_new);
    eng.check_descent(t + 1, x, x_new, ev, ev_new, detail::plain_mean(msgs));
    msgs = compress_all(ev_new, t + 1);
    eng.record(t + 1, x_new, ev_new, detail::mean_sq_error(msgs, ev_new.grads), std::nullopt);
    x = std::move(x_new);
    ev = std::move(ev_new);
  }
  return eng.finish(std::move(x));
}

// Classical error feedback:
//   w_i^0 = C(gamma grad f_i(x^0)), e_i^0 = 0
//   x+ = x - (1/n) sum_i w_i
//   e_i+ = e_i + gamma grad f_i(x) - w_i
//   w_i+ = C(e_i+ + gamma grad f_i(x+))
// G is reported with w_i/gamma as the gradient estimate.
inline RunTrace run_ef(const GlobalProblem& gp, const Vector& x0, double gamma, const Compressor& comp,
                       std::size_t T, std::uint64_t seed, const RunHooks& hooks = {}) {
  detail::require_x0(gp, x0);
  const std::size_t n = gp.size();
  detail::Engine eng(gp, Method::EF, gamma, comp, T, seed, hooks);
  auto estimates = [&](const std::vector<Vector>& w) {
    std::vector<Vector> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = w[i] / gamma;
    return out;
  };
  auto states = [&](const std::vector<Vector>& e, const std::vector<Vector>& w) {
    std::vector<WorkerState> out(n);
    if (!hooks.observer) return out;
    for (std::size_t i = 0; i < n; ++i) {
      out[i].e = e[i];
      out[i].w = w[i];
    }
    return out;
  };

  Vector x = x0;
  auto ev = eng.evaluate(x);
  std::vector<Vector> e(n, Vector::Zero(x0.size()));
  std::vector<Vector> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = make_stream(seed, i, 0);
    w[i] = comp(gamma * ev.grads[i], &rng);
  }
  eng.record(0, x, ev, detail::mean_sq_error(estimates(w), ev.grads), std::nullopt, states(e, w));
  for (std::size_t t = 0; t < T; ++t) {
    Vector x_new = x - detail::plain_mean(w);
    auto ev_new = eng.evaluate(x_new);
    eng.guard(t, x_new, ev_new);
    eng.check_descent(t + 1, x, x_new, ev, ev_new, detail::plain_mean(estimates(w)));
    for (std::size_t i = 0; i < n; ++i) {
      e[i] = e[i] + gamma * ev.grads[i] - w[i];
      Rng rng = make_stream(seed, i, t + 1);
      w[i] = comp(e[i] + gamma * ev_new.grads[i], &rng);
    }
    eng.record(t + 1, x_new, ev_new, detail::mean_sq_error(estimates(w), ev_new.grads), std::nullopt, states(e, w));
    x = std::move(x_new);
    ev = std::move(ev_new);
  }
  return eng.finish(std::move(x));
}

// EF21: each worker keeps g_i = M_i(grad f_i(x)) and sends C(grad f_i(x+) - g_i);
// the master keeps g = (1/n) sum_i g_i incrementally. The step itself uses
// the worker-ordered average of gamma g_i.
inline RunTrace run_ef21(const GlobalProblem& gp, const Vector& x0, double gamma, const Compressor& comp,
                         std::size_t T, std::uint64_t seed, InitMode init = InitMode::CompressG0,
                         const RunHooks& hooks = {}) {
  return detail::ef21_loop(Method::EF21, gp, x0, gamma, comp, T, seed, init, 0, hooks);
}

// EF21 driven by minibatch gradients (g_i^0 = C(stochastic gradient)). The
// recorded metrics always use exact gradients.
inline RunTrace run_ef21_sgd(const GlobalProblem& gp, const Vector& x0, double gamma, const Compressor& comp,
                             std::size_t T, std::size_t batch_size, std::uint64_t seed, const RunHooks& hooks = {}) {
  std::size_t smallest = std::numeric_limits<std::size_t>::max();
  for (const auto& c : gp.clients()) smallest = std::min(smallest, c.samples());
  if (batch_size < 1 || batch_size > smallest) {
    throw ArgumentError("batch_size must satisfy 1 <= batch_size <= min N_i (" + std::to_string(smallest) + ")");
  }
  return detail::ef21_loop(Method::EF21SGD, gp, x0, gamma, comp, T, seed, InitMode::CompressG0, batch_size, hooks);
}

// EF21+: each worker keeps whichever of b = C(grad f_i(x+)) and
// m = g_i + C(grad f_i(x+) - g_i) is closer to grad f_i(x+); ties go to m.
// dcgd_fraction is the share of workers that picked b.
inline RunTrace run_ef21_plus(const GlobalProblem& gp, const Vector& x0, double gamma, const Compressor& comp,
                              std::size_t T, std::uint64_t seed, const RunHooks& hooks = {}) {
  detail::require_x0(gp, x0);
  if (!comp.deterministic() && !hooks.allow_randomized_plus) {
    throw ArgumentError("EF21+ is only analysed for deterministic compressors; set allow_randomized_plus to override");
  }
  const std::size_t n = gp.size();
  detail::Engine eng(gp, Method::EF21Plus, gamma, comp, T, seed, hooks);
  Vector x = x0;
  auto ev = eng.evaluate(x);
  std::vector<Vector> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = make_stream(seed, i, 0);
    g[i] = comp(ev.grads[i], &rng);
  }
  double G = detail::mean_sq_error(g, ev.grads);
  eng.record(0, x, ev, G, 0.0, hooks.observer ? detail::g_states(g) : std::vector<WorkerState>{});
  for (std::size_t t = 0; t < T; ++t) {
    const Vector direction = detail::plain_mean(g);
    Vector x_new = x - detail::scaled_mean(g, gamma);
    auto ev_new = eng.evaluate(x_new);
    eng.guard(t, x_new, ev_new);
    std::size_t plain_picks = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const Vector& v = ev_new.grads[i];
      Rng rng = make_stream(seed, i, t + 1);
      Vector b = comp(v, &rng);
      Vector m = markov_step(MarkovState{g[i]}, v, comp, &rng).state.g;
      if (squared_distance(m, v) <= squared_distance(b, v)) {
        g[i] = std::move(m);
      } else {
        g[i] = std::move(b);
        ++plain_picks;
      }
    }
    const double G_new = detail::mean_sq_error(g, ev_new.grads);
    eng.check_descent(t + 1, x, x_new, ev, ev_new, direction);
    eng.check_distortion(t + 1, G, G_new, ev, ev_new);
    eng.record(t + 1, x_new, ev_new, G_new, static_cast<double>(plain_picks) / static_cast<double>(n),
               hooks.observer ? detail::g_states(g) : std::vector<WorkerState>{});
    x = std::move(x_new);
    ev = std::move(ev_new);
    G = G_new;
  }
  return eng.finish(std::move(x));
}

}  // namespace ef21
