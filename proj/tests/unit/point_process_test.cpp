#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "thrnn/error.hpp"
#include "thrnn/point_process.hpp"

namespace thrnn {
namespace {

TEST(TimeDensity, LogDensityMatchesClosedForm) {
  for (double s : {-2.0, -0.3, 0.0, 1.5}) {
    for (double w : {-0.8, -0.1, 0.05, 0.7}) {
      for (double g : {0.0, 0.4, 3.0, 12.0}) {
        const double want = oracle::log_density(s, w, g);
        EXPECT_NEAR(log_density_at(s, w, g), want, 1e-12 * std::max(1.0, std::abs(want)));
        EXPECT_NEAR(intensity_at(s, w, g), std::exp(s + w * g), 1e-12 * std::exp(s + w * g));
      }
    }
  }
}

TEST(TimeDensity, HiddenStateEntersThroughDotProduct) {
  TimeHeadParams p{{0.5, -1.0}, -0.2, 0.3};
  const std::vector<double> h{0.4, 0.1};
  const double s = 0.5 * 0.4 - 1.0 * 0.1 + 0.3;
  EXPECT_DOUBLE_EQ(p.bias_term(h), s);
  EXPECT_DOUBLE_EQ(log_density(h, 2.0, p), log_density_at(s, -0.2, 2.0));
  EXPECT_THROW(log_density(h, -1.0, p), InvalidArgument);
}

TEST(TimeDensity, CdfMatchesIntegratedDensity) {
  for (double s : {-1.0, 0.5}) {
    for (double w : {-0.3, 0.2}) {
      for (double t : {0.5, 2.0, 6.0}) {
        const double numeric =
            oracle::simpson([&](double x) { return std::exp(oracle::log_density(s, w, x)); }, 0.0, t, 2000);
        EXPECT_NEAR(density_cdf_at(s, w, t), numeric, 1e-10);
      }
    }
  }
}

TEST(TimeDensity, TotalMassIsDefectiveOnlyForNegativeWeight) {
  EXPECT_DOUBLE_EQ(density_total_mass_at(0.0, 0.5), 1.0);
  EXPECT_NEAR(density_total_mass_at(0.0, -1.0), 1.0 - std::exp(-1.0), 1e-15);
  EXPECT_NEAR(density_total_mass_at(-2.0, -0.5), 1.0 - std::exp(-std::exp(-2.0) / 0.5), 1e-15);
}

TEST(TimeDensity, SmallWeightBranchIsContinuous) {
  for (double s : {-2.0, 0.0, 2.0}) {
    for (double g : {0.0, 0.5, 5.0, 29.0}) {
      const double limit = log_density_at(s, 0.0, g);
      EXPECT_NEAR(limit, s - std::exp(s) * g, 1e-12);
      // First-order change in w is g (1 - e^s g / 2).
      const double slope = g * (1.0 - std::exp(s) * g / 2.0);
      const double second = std::exp(s) * g * g * g;
      EXPECT_NEAR(log_density_at(s, 1e-7, g), limit + 1e-7 * slope, 1e-14 * second + 1e-12);
      EXPECT_NEAR(log_density_at(s, -1e-7, g), limit - 1e-7 * slope, 1e-14 * second + 1e-12);
      EXPECT_NEAR(log_density_at(s, 2e-6, g), oracle::log_density(s, 2e-6, g), 1e-8);
    }
  }
}

TEST(TimeDensity, OverflowIsReported) {
  EXPECT_THROW(log_density_at(0.0, 1.0, 800.0), NumericOverflow);
  EXPECT_THROW(time_loss_terms(0.0, 2.0, 400.0, 1.0), NumericOverflow);
}

TEST(TimeLoss, DerivativesMatchFiniteDifferences) {
  for (double alpha : {1.0, 0.5, 0.3}) {
    for (double s : {-1.5, 0.2, 1.0}) {
      for (double w : {-0.4, -1e-8, 0.0, 3e-7, 0.3}) {
        for (double g : {0.05, 1.0, 7.0}) {
          const auto t = time_loss_terms(s, w, g, alpha);
          const double gp = std::pow(g, alpha);
          if (std::abs(w) < 1e-4) {
            // The closed form and finite differences cancel near w = 0; compare with the limit instead.
            const double es = std::exp(s);
            const double bound = std::abs(w) * (gp + es * gp * gp + es * gp * gp * gp) + 1e-12;
            EXPECT_NEAR(t.loss, -(s - es * gp), bound);
            EXPECT_NEAR(t.d_s, -1.0 + es * gp, bound) << s << " " << w << " " << g;
            EXPECT_NEAR(t.d_w, -gp + es * gp * gp / 2.0, bound) << s << " " << w << " " << g;
            continue;
          }
          EXPECT_NEAR(t.loss, -oracle::log_density(s, w, gp), 1e-9 * std::max(1.0, std::abs(t.loss)));
          const double eps = 1e-5;
          const double ds = -(oracle::log_density(s + eps, w, gp) - oracle::log_density(s - eps, w, gp)) / (2 * eps);
          const double dw = -(oracle::log_density(s, w + eps, gp) - oracle::log_density(s, w - eps, gp)) / (2 * eps);
          EXPECT_LT(oracle::relative_error(t.d_s, ds, 1e-6), 1e-6) << s << " " << w << " " << g;
          EXPECT_LT(oracle::relative_error(t.d_w, dw, 1e-6), 1e-6) << s << " " << w << " " << g;
        }
      }
    }
  }
}

TEST(TimeLoss, WeightDerivativeIsContinuousAtZero) {
  const auto at0 = time_loss_terms(0.3, 0.0, 2.0, 1.0);
  // d/dw of -log f at w = 0 is -g + e^s g^2 / 2.
  EXPECT_NEAR(at0.d_w, -2.0 + std::exp(0.3) * 2.0, 1e-12);
  EXPECT_NEAR(time_loss_terms(0.3, 1e-7, 2.0, 1.0).d_w, at0.d_w, 1e-5);
}

TEST(TimeLoss, MaskedExamplesContributeNothing) {
  TimeHeadParams p{{1.0}, -0.1, 0.0};
  EXPECT_EQ(time_loss(std::vector<double>{0.5}, 3.0, p, TimeLossConfig{}, true), 0.0);
}

TEST(TimeLoss, TapeOpGradientsMatchFiniteDifferences) {
  TimeHead head(3);
  head.v.value[0] = 0.3;
  head.v.value[1] = -0.5;
  head.v.value[2] = 0.2;
  head.w.value[0] = -0.15;
  head.b.value[0] = 0.1;
  Parameter hsrc("h", 1, 3);
  hsrc.value[0] = 0.4;
  hsrc.value[1] = -0.1;
  hsrc.value[2] = 0.7;
  for (double alpha : {1.0, 0.4}) {
    auto build = [&](Tape& t) {
      const TimeLossConfig cfg{alpha, 86400.0};
      const auto h = t.embedding(hsrc, 0);
      Tape::Var terms[2] = {time_loss(t, h, head, 1.7, cfg), time_loss(t, h, head, 0.2, cfg)};
      const double w[2] = {0.5, 0.5};
      return t.weighted_sum(terms, w);
    };
    const auto worst = gradcheck::check({&hsrc, &head.v, &head.w, &head.b}, build);
    EXPECT_LT(worst.rel_error, 1e-6) << worst.where;
  }
}

TEST(ExpectedReturnTime, MatchesSurvivalIntegralOracle) {
  const QuadratureConfig q{30.0, 4096};
  for (double s : {-1.0, 0.0, 1.0}) {
    for (double w : {-0.3, 0.0, 0.1}) {
      // int_0^T t f = int_0^T S(t) dt - T S(T), S the closed-form survival.
      auto surv = [&](double t) { return std::exp(oracle::log_density(s, w, t) - (s + w * t)); };
      const double T = q.cutoff;
      const double want = oracle::simpson(surv, 0.0, T, 20000) - T * surv(T);
      EXPECT_NEAR(expected_return_time_at(s, w, q), want, 2e-5 * std::max(1.0, want)) << s << " " << w;
    }
  }
}

TEST(ExpectedReturnTime, TruncatedExponentialClosedForm) {
  for (double T : {2.0, 5.0, 30.0}) {
    const QuadratureConfig q{T, 2048};
    const double exact = 1.0 - (T + 1.0) * std::exp(-T);
    // Trapezoid error h^2/12 (g'(T) - g'(0)) for g(t) = t e^-t, up to O(h^4).
    const double h = T / 2047.0;
    const double predicted = exact + h * h / 12.0 * ((1.0 - T) * std::exp(-T) - 1.0);
    EXPECT_NEAR(expected_return_time_at(0.0, 0.0, q), predicted, 1e-9) << T;
    EXPECT_NEAR(expected_return_time_at(0.0, 0.0, q), exact, 2e-5) << T;
  }
}

TEST(QuadratureConfig, Validation) {
  EXPECT_THROW((QuadratureConfig{0.0, 2048}.validate()), InvalidArgument);
  EXPECT_THROW((QuadratureConfig{30.0, 10}.validate()), InvalidArgument);
  EXPECT_THROW((TimeLossConfig{0.0, 86400.0}.validate()), InvalidArgument);
  EXPECT_THROW((TimeLossConfig{1.2, 86400.0}.validate()), InvalidArgument);
  EXPECT_NO_THROW((TimeLossConfig{1.0, 86400.0}.validate()));
}

// Property: for proper densities the quadrature mass is one up to the
// truncation tail, which the closed-form CDF predicts.
TEST(TimeDensityProperty, QuadratureMassMatchesClosedFormCdf) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> S(-2.0, 2.0), W(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double s = S(rng), w = W(rng);
    const QuadratureConfig q{std::max(30.0, 40.0 * std::exp(-s)), 8192};
    const double mass = density_mass_at(s, w, q);
    EXPECT_NEAR(mass, density_cdf_at(s, w, q.cutoff), 2e-3) << s << " " << w;
    EXPECT_LE(mass, density_total_mass_at(s, w) + 2e-3);
  }
}

}  // namespace
}  // namespace thrnn
