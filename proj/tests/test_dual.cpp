#include <cmath>

#include <gtest/gtest.h>

#include "fpe/dual.hpp"
#include "oracles.hpp"

using fpe::Dual;
using D1 = Dual<double>;
using D2 = Dual<D1>;

TEST(Dual, ArithmeticCarriesDerivative) {
  const D1 x(3.0, 1.0);
  const D1 f = x * x * 2.0 - 1.0 / x + 4.0;
  EXPECT_DOUBLE_EQ(f.v, 18.0 - 1.0 / 3.0 + 4.0);
  EXPECT_DOUBLE_EQ(f.d, 12.0 + 1.0 / 9.0);
}

TEST(Dual, ElementaryFunctions) {
  const double a = 0.7;
  const D1 x(a, 1.0);
  EXPECT_NEAR(sin(x).d, std::cos(a), 1e-15);
  EXPECT_NEAR(cos(x).d, -std::sin(a), 1e-15);
  EXPECT_NEAR(exp(x).d, std::exp(a), 1e-15);
  EXPECT_NEAR(log(x).d, 1.0 / a, 1e-15);
  EXPECT_NEAR(sqrt(x).d, 0.5 / std::sqrt(a), 1e-15);
  EXPECT_NEAR(pow(x, -1.5).d, -1.5 * std::pow(a, -2.5), 1e-14);
}

TEST(Dual, NestedGivesSecondDerivative) {
  const double a = 1.3;
  const D2 x(D1(a, 1.0), D1(1.0, 0.0));
  const D2 f = sin(x) * x;
  EXPECT_NEAR(f.d.d, 2.0 * std::cos(a) - a * std::sin(a), 1e-14);
}

TEST(Dual, MixedPartialOfTwoVariables) {
  // f = x^2 y^3; d2f/dxdy = 6 x y^2
  const double xv = 0.4, yv = -1.1;
  const D2 x(D1(xv, 1.0), D1(0.0, 0.0));
  const D2 y(D1(yv, 0.0), D1(1.0, 0.0));
  const D2 f = x * x * y * y * y;
  EXPECT_NEAR(f.d.d, 6.0 * xv * yv * yv, 1e-14);
}

TEST(DualProperty, MatchesCentralDifferenceOnRandomComposites) {
  oracle::Gen gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    const double a = gen.uniform(0.2, 2.0), b = gen.uniform(-2.0, 2.0), c = gen.uniform(0.1, 3.0);
    auto f = [&](auto x) { return sqrt(x * x * c + 1.0) * sin(x * b) + exp(-x) / (x + a); };
    const double t = gen.uniform(0.1, 2.0);
    const double ad = f(D1(t, 1.0)).d;
    const double h = 1e-5;
    const double fd = (f(D1(t + h, 0.0)).v - f(D1(t - h, 0.0)).v) / (2 * h);
    EXPECT_NEAR(ad, fd, 1e-8 * (1.0 + std::abs(fd)));
  }
}
