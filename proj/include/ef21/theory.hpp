#pragma once

// Closed-form constants of the EF21 analysis: the (theta, beta) pair of the
// Markov-compressor distortion recursion, its optimal Young parameter, the
// two theoretical stepsizes, and the Lyapunov function of the PL rate.

#include "ef21/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace ef21::theory {

struct ThetaBeta {
  double theta;
  double beta;
};

// theta(s) = 1 - (1 - alpha)(1 + s), beta(s) = (1 - alpha)(1 + 1/s).
// theta is not clamped: it is non-positive once s >= alpha / (1 - alpha).
inline ThetaBeta theta_beta(double alpha, double s) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ArgumentError("theta_beta: alpha must lie in (0, 1]");
  if (!(s > 0.0)) throw ArgumentError("theta_beta: s must be positive");
  const double q = 1.0 - alpha;
  return {1.0 - q * (1.0 + s), q * (1.0 + 1.0 / s)};
}

struct OptimalS {
  double s_star;  // +inf when alpha == 1
  double theta;
  double beta;
  double ratio;   // sqrt(beta / theta)
};

// Minimiser of beta(s)/theta(s) over 0 < s < alpha/(1-alpha):
//   s* = 1/sqrt(1-alpha) - 1, theta* = 1 - sqrt(1-alpha),
//   beta* = (1-alpha)/(1 - sqrt(1-alpha)),
//   sqrt(beta*/theta*) = sqrt(1-alpha)/(1 - sqrt(1-alpha))
//                      = (1 + sqrt(1-alpha))/alpha - 1 <= 2/alpha - 1.
// alpha == 1 is the lossless limit theta = 1, beta = 0.
inline OptimalS optimal_s(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ArgumentError("optimal_s: alpha must lie in (0, 1]");
  if (alpha == 1.0) return {std::numeric_limits<double>::infinity(), 1.0, 0.0, 0.0};
  const double r = std::sqrt(1.0 - alpha);
  const double theta = 1.0 - r;
  return {1.0 / r - 1.0, theta, (1.0 - alpha) / theta, r / theta};
}

inline double stepsize_nonconvex(double L, double L_tilde, double alpha) {
  if (!(L > 0.0 && L_tilde > 0.0)) throw ArgumentError("stepsize_nonconvex: L and L_tilde must be positive");
  return 1.0 / (L + L_tilde * optimal_s(alpha).ratio);
}

inline double stepsize_pl(double L, double L_tilde, double alpha, double mu) {
  if (!(L > 0.0 && L_tilde > 0.0)) throw ArgumentError("stepsize_pl: L and L_tilde must be positive");
  if (!(mu > 0.0)) throw ArgumentError("stepsize_pl: mu must be positive");
  const auto opt = optimal_s(alpha);
  const double first = 1.0 / (L + L_tilde * std::sqrt(2.0 * opt.beta / opt.theta));
  return std::min(first, opt.theta / (2.0 * mu));
}

// gamma = 1/(sqrt(a) + b) satisfies a*gamma^2 + b*gamma <= 1 and is within a
// factor two of the largest such gamma.
inline double quadratic_stepsize_bound(double a, double b) {
  if (!(a >= 0.0 && b >= 0.0) || (a == 0.0 && b == 0.0)) {
    throw ArgumentError("quadratic_stepsize_bound: need a, b >= 0, not both zero");
  }
  return 1.0 / (std::sqrt(a) + b);
}

// Psi = f(x) - f(x*) + (gamma/theta) G. The function gap is clamped at zero
// because f(x*) is an estimate; per-step decrease checks use the unclamped
// form.
inline double lyapunov_unclamped(double f_gap, double G, double gamma, double theta) {
  return f_gap + (gamma / theta) * G;
}

inline double lyapunov(double f_gap, double G, double gamma, double theta) {
  return lyapunov_unclamped(std::max(f_gap, 0.0), G, gamma, theta);
}

struct TheoryConstants {
  double alpha;
  double s_star;
  double theta;
  double beta;
  double ratio;
  double L;
  double L_tilde;
  std::optional<double> mu;
  double gamma_nonconvex;
  std::optional<double> gamma_pl;
};

inline TheoryConstants make_constants(double alpha, double L, double L_tilde, std::optional<double> mu = {}) {
  const auto opt = optimal_s(alpha);
  TheoryConstants c{alpha, opt.s_star, opt.theta, opt.beta, opt.ratio, L, L_tilde, mu,
                    stepsize_nonconvex(L, L_tilde, alpha), std::nullopt};
  if (mu) c.gamma_pl = stepsize_pl(L, L_tilde, alpha, *mu);
  return c;
}

}  // namespace ef21::theory
