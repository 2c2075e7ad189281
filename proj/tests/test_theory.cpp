#include "ef21/theory.hpp"

#include <gtest/gtest.h>

using namespace ef21;
using namespace ef21::theory;

namespace {

// beta(s)/theta(s) over a log grid on (0, alpha/(1-alpha)), computed from
// the definitions only.
double grid_min_ratio(double alpha, std::size_t points, double* argmin = nullptr) {
  const double q = 1.0 - alpha;
  const double hi = alpha / q;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < points; ++i) {
    const double s = hi * static_cast<double>(i) / static_cast<double>(points);
    const double theta = 1.0 - q * (1.0 + s);
    const double beta = q * (1.0 + 1.0 / s);
    if (beta / theta < best) {
      best = beta / theta;
      if (argmin) *argmin = s;
    }
  }
  return best;
}

}  // namespace

TEST(ThetaBeta, Substitution) {
  auto tb = theta_beta(0.75, 1.0);
  EXPECT_DOUBLE_EQ(tb.theta, 0.5);
  EXPECT_DOUBLE_EQ(tb.beta, 0.5);
  tb = theta_beta(0.5, 1.0);
  EXPECT_DOUBLE_EQ(tb.theta, 0.0);
  EXPECT_DOUBLE_EQ(tb.beta, 1.0);
  tb = theta_beta(1.0 - 1e-12, 1.0);
  EXPECT_NEAR(tb.theta, 1.0, 1e-11);
  EXPECT_NEAR(tb.beta, 0.0, 1e-11);
}

TEST(ThetaBeta, NonPositiveThetaAllowed) { EXPECT_LT(theta_beta(0.2, 5.0).theta, 0.0); }

TEST(ThetaBeta, RejectsBadInput) {
  EXPECT_THROW(theta_beta(0.0, 1.0), ArgumentError);
  EXPECT_THROW(theta_beta(0.5, 0.0), ArgumentError);
}

TEST(OptimalS, ThreeQuarters) {
  const auto o = optimal_s(0.75);
  EXPECT_DOUBLE_EQ(o.s_star, 1.0);
  EXPECT_DOUBLE_EQ(o.theta, 0.5);
  EXPECT_DOUBLE_EQ(o.beta, 0.5);
  EXPECT_DOUBLE_EQ(o.ratio, 1.0);
  double argmin = 0.0;
  EXPECT_NEAR(grid_min_ratio(0.75, 100000, &argmin), o.beta / o.theta, 1e-6);
  EXPECT_NEAR(argmin, 1.0, 1e-4);
}

TEST(OptimalS, LosslessLimit) {
  const auto o = optimal_s(1.0);
  EXPECT_EQ(o.theta, 1.0);
  EXPECT_EQ(o.beta, 0.0);
  EXPECT_EQ(o.ratio, 0.0);
  EXPECT_TRUE(std::isinf(o.s_star));
}

TEST(OptimalS, RatioBelowTwoOverAlpha) {
  for (double a : {0.1, 0.5, 0.9}) EXPECT_LE(optimal_s(a).ratio, 2.0 / a - 1.0);
}

TEST(OptimalS, RatioMatchesDefinitions) {
  for (double a : {0.01, 0.2, 0.5, 0.75, 0.99}) {
    const auto o = optimal_s(a);
    const auto tb = theta_beta(a, o.s_star);
    EXPECT_NEAR(tb.theta, o.theta, 1e-12);
    EXPECT_NEAR(tb.beta, o.beta, 1e-12 * (1 + o.beta));
    EXPECT_NEAR(o.ratio, std::sqrt(tb.beta / tb.theta), 1e-12 * (1 + o.ratio));
    EXPECT_NEAR(o.ratio, (1.0 + std::sqrt(1.0 - a)) / a - 1.0, 1e-12 * (1 + o.ratio));
  }
}

TEST(OptimalS, MinimisesOnGridForRandomAlpha) {
  Rng rng = make_stream(21, 0, 0, StreamPurpose::Oracle);
  for (int rep = 0; rep < 200; ++rep) {
    const double a = 0.001 + 0.998 * uniform01(rng);
    const auto o = optimal_s(a);
    const double star = o.beta / o.theta;
    const double q = 1.0 - a, hi = a / q;
    for (int i = 1; i < 1000; ++i) {
      const double s = hi * i / 1000.0;
      const auto tb = theta_beta(a, s);
      EXPECT_LE(star, tb.beta / tb.theta * (1 + 1e-12)) << "alpha=" << a << " s=" << s;
    }
  }
}

TEST(OptimalS, RatioDecreasingInAlpha) {
  double prev = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 1000; ++i) {
    const double r = optimal_s(i / 1000.0).ratio;
    EXPECT_LT(r, prev);
    prev = r;
  }
}

TEST(Stepsizes, Nonconvex) {
  EXPECT_EQ(stepsize_nonconvex(1, 1, 1), 1.0);
  EXPECT_DOUBLE_EQ(stepsize_nonconvex(1, 1, 0.75), 0.5);
  EXPECT_DOUBLE_EQ(stepsize_nonconvex(2, 3, 0.75), 0.2);
  for (double L : {0.3, 1.0, 7.5, 1234.0}) EXPECT_EQ(stepsize_nonconvex(L, 2 * L, 1.0), 1.0 / L);
}

TEST(Stepsizes, PL) {
  EXPECT_NEAR(stepsize_pl(1, 1, 0.75, 1e-6), 1.0 / (1.0 + std::sqrt(2.0)), 1e-15);
  EXPECT_DOUBLE_EQ(stepsize_pl(1, 1, 0.75, 1e6), 2.5e-7);
  EXPECT_EQ(stepsize_pl(1, 1, 1.0, 0.1), 1.0);
  EXPECT_THROW(stepsize_pl(1, 1, 0.5, 0.0), ArgumentError);
}

TEST(Stepsizes, PLKeepsGammaMuBelowHalfTheta) {
  Rng rng = make_stream(22, 0, 0, StreamPurpose::Oracle);
  for (int rep = 0; rep < 200; ++rep) {
    const double a = 0.01 + 0.99 * uniform01(rng);
    const double L = 0.1 + 10 * uniform01(rng), Lt = L * (1 + uniform01(rng));
    const double mu = L * uniform01(rng) + 1e-9;
    const double g = stepsize_pl(L, Lt, a, mu);
    EXPECT_LE(g * mu, optimal_s(a).theta / 2.0 * (1 + 1e-15));
    EXPECT_LE(g * mu, 0.5);
  }
}

TEST(QuadraticBound, Examples) {
  EXPECT_DOUBLE_EQ(quadratic_stepsize_bound(1, 1), 0.5);
  EXPECT_LE(0.25 + 0.5, 1.0);
  EXPECT_DOUBLE_EQ(quadratic_stepsize_bound(0, 2), 0.5);
  EXPECT_DOUBLE_EQ(quadratic_stepsize_bound(4, 0), 0.5);
  EXPECT_THROW(quadratic_stepsize_bound(0, 0), ArgumentError);
  EXPECT_THROW(quadratic_stepsize_bound(-1, 1), ArgumentError);
}

TEST(QuadraticBound, FeasibleAndWithinFactorTwo) {
  Rng rng = make_stream(23, 0, 0, StreamPurpose::Oracle);
  for (int rep = 0; rep < 200; ++rep) {
    const double a = std::exp(8 * (uniform01(rng) - 0.5));
    const double b = std::exp(8 * (uniform01(rng) - 0.5));
    const double g = quadratic_stepsize_bound(a, b);
    EXPECT_LE(a * g * g + b * g, 1.0 + 1e-15);
    EXPECT_GT(a * 4 * g * g + b * 2 * g, 1.0);
  }
}

TEST(Lyapunov, Examples) {
  EXPECT_EQ(lyapunov(0, 0, 0.3, 0.7), 0.0);
  EXPECT_DOUBLE_EQ(lyapunov(1, 2, 0.5, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(lyapunov(0.1, 0, 0.5, 0.5), 0.1);
  EXPECT_DOUBLE_EQ(lyapunov(-0.1, 1, 0.5, 0.5), 1.0);
  EXPECT_DOUBLE_EQ(lyapunov_unclamped(-0.1, 1, 0.5, 0.5), 0.9);
}

TEST(Constants, Bundle) {
  const auto c = make_constants(0.75, 1.0, 1.0, 1e-6);
  EXPECT_DOUBLE_EQ(c.theta, 0.5);
  EXPECT_DOUBLE_EQ(c.gamma_nonconvex, 0.5);
  ASSERT_TRUE(c.gamma_pl.has_value());
  EXPECT_NEAR(*c.gamma_pl, 1.0 / (1.0 + std::sqrt(2.0)), 1e-15);
  EXPECT_FALSE(make_constants(0.5, 1, 1).gamma_pl.has_value());
}
