#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "fpe/variation.hpp"
#include "fpe/metrics.hpp"
#include "oracles.hpp"

using namespace fpe;
using oracle::Mat;
using oracle::Vec;
using std::numbers::pi;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

// (1/p) d/ds E_p(c + s X) at s = 0 by central differences.
template <class M>
double energy_derivative(const M& m, const DiscretizedCurve& c, double p, const VectorFieldAlongCurve& X,
                         double eps = 1e-5) {
  const auto xs = X.nodes();
  auto shifted = [&](double s) {
    std::vector<Point> nodes;
    for (std::size_t k = 0; k < c.node_count(); ++k) nodes.push_back(c.node(k) + s * xs[k]);
    return DiscretizedCurve(nodes, c.junctions());
  };
  return (p_energy(m, shifted(eps), p).value - p_energy(m, shifted(-eps), p).value) / (2 * eps * p);
}

VectorFieldAlongCurve random_field(oracle::Gen& gen, const DiscretizedCurve& c) {
  const auto n = static_cast<Eigen::Index>(c.dim());
  const Vec a = gen.vec(n), b = gen.vec(n);
  const int k = gen.integer(1, 3);
  return VectorFieldAlongCurve::sample(c, [=](double t) -> Tangent {
    return std::sin(pi * t) * a + std::sin(k * pi * t) * std::cos(t) * b;
  });
}

}  // namespace

TEST(Geodesic, EquatorHasZeroResidual) {
  const Sphere s(1.0);
  for (std::size_t N : {50u, 100u, 200u}) {
    const auto c = DiscretizedCurve::sample([](double t) { return v2(pi / 2, 2 * pi * t); }, N);
    EXPECT_LE(geodesic_defect(s, c), 1e-10);
  }
}

TEST(Geodesic, LatitudeCircleIsNotAGeodesic) {
  const Sphere s(1.0);
  // nabla c'/dt has theta component sin cos (2 pi)^2 and |c'|^2 = (sin 2 pi)^2
  const double expect = std::cos(pi / 3) / std::sin(pi / 3);
  for (std::size_t N : {50u, 100u, 200u}) {
    const auto c = DiscretizedCurve::sample([](double t) { return v2(pi / 3, 2 * pi * t); }, N);
    EXPECT_NEAR(geodesic_defect(s, c), expect, 1e-6);
    EXPECT_THROW(require_geodesic(s, c), NotAGeodesic);
  }
}

TEST(Geodesic, ResidualConvergesOnTiltedCircle) {
  const Sphere s(1.0);
  const Eigen::Vector3d u(std::sin(1.0), 0.0, std::cos(1.0)), w(0.0, 1.0, 0.0);
  const auto point = [&](double t) {
    const Eigen::Vector3d q = std::cos(2.0 * t) * u + std::sin(2.0 * t) * w;
    return v2(std::acos(q.z()), std::atan2(q.y(), q.x()));
  };
  const double d1 = geodesic_defect(s, DiscretizedCurve::sample(point, 50));
  const double d2 = geodesic_defect(s, DiscretizedCurve::sample(point, 100));
  EXPECT_LE(d2, 1e-6);
  EXPECT_GT(d1 / d2, 8.0);
}

TEST(Geodesic, ShootingAlongEquatorReachesAntipode) {
  const Sphere s(1.0);
  const auto shot = shoot_geodesic_states(s, v2(pi / 2, 0.0), v2(0.0, 1.0), pi, 400);
  EXPECT_NEAR(shot.curve.end()[0], pi / 2, 1e-12);
  EXPECT_NEAR(shot.curve.end()[1], pi, 1e-10);
  EXPECT_LE(shot.speed_drift, 1e-8);
}

TEST(Geodesic, ShootingRejectsBadInput) {
  const Sphere s(1.0);
  EXPECT_THROW(shoot_geodesic(s, v2(pi / 2, 0.0), v2(0.0, 1.0), 1.0, 7), InvalidInput);
  EXPECT_THROW(shoot_geodesic(s, v2(pi / 2, 0.0), v2(0.0, 1.0), -1.0, 8), InvalidInput);
  EXPECT_THROW(shoot_geodesic(s, v2(pi / 2, 0.0), v2(0.0, 0.0), 1.0, 8), ZeroVelocity);
  EXPECT_THROW(shoot_geodesic(s, v2(1.0, 0.0), v2(1.0, 0.0), 3.0, 100), ChartDomain);
}

TEST(GeodesicProperty, RandersShotGeodesicsHaveConstantSpeed) {
  oracle::Gen gen(51);
  for (int trial = 0; trial < 5; ++trial) {
    const Mat a = gen.spd(2);
    const Mat w = Mat::NullaryExpr(2, 2, [&] { return gen.uniform(-0.1, 0.1); });
    const Randers r(a, gen.covector(a, 0.3), w, 2.0);
    const Vec x0 = gen.vec(2, -0.3, 0.3);
    const Vec y0 = gen.nonzero(2, 0.3) * 0.5;
    const auto shot = shoot_geodesic_states(r, x0, y0, 1.0, 400);
    EXPECT_LE(shot.speed_drift, 1e-6);
    EXPECT_LE(geodesic_defect(r, shot.curve), 1e-6);
    EXPECT_LE(speed_spread(r, shot.curve), 1e-6);
  }
}

TEST(Geodesic, BvpFindsEquatorArc) {
  const Sphere s(1.0);
  const Point x0 = v2(pi / 2, 0.0), x1 = v2(pi / 2, 2.0);
  const auto init = DiscretizedCurve::sample(
      [&](double t) { return v2(pi / 2 + 0.2 * std::sin(pi * t), 2.0 * (t + 0.3 * std::sin(2 * pi * t) / (2 * pi))); },
      100);
  for (double p : {2.0, 0.5, -1.0, 3.0}) {
    const BvpResult res = solve_geodesic_bvp(s, x0, x1, p, init);
    EXPECT_LE(res.gradient_norm, 1e-8);
    EXPECT_NEAR(length(s, res.curve), 2.0, 1e-10) << "p = " << p;
    EXPECT_LE(speed_spread(s, res.curve), 1e-8);
    for (const auto& x : res.curve.nodes()) EXPECT_NEAR(x[0], pi / 2, 1e-8);
    if (p == 2.0) EXPECT_NEAR(p_energy(s, res.curve, 2.0).value, 4.0, 1e-9);
    EXPECT_LE(first_variation_field(s, res.curve, p).total_norm, 1e-6);
  }
}

TEST(Geodesic, BvpFindsStraightLineInEuclideanSpace) {
  const Euclidean e(2);
  const auto init = DiscretizedCurve::sample([](double t) { return v2(t * t, t + 0.3 * std::sin(pi * t)); }, 100);
  const BvpResult res = solve_geodesic_bvp(e, v2(0, 0), v2(1, 1), 2.0, init);
  EXPECT_NEAR(length(e, res.curve), std::sqrt(2.0), 1e-12);
  for (std::size_t k = 0; k < res.curve.node_count(); ++k)
    EXPECT_LE((res.curve.node(k) - res.curve.param(k) * v2(1, 1)).norm(), 1e-10);
}

TEST(Geodesic, BvpReportsNonConvergence) {
  const Sphere s(1.0);
  const auto init = DiscretizedCurve::sample([](double t) { return v2(pi / 2 + 0.3 * std::sin(pi * t), 2.0 * t); }, 100);
  BvpOptions opt;
  opt.max_iterations = 1;
  try {
    solve_geodesic_bvp(s, v2(pi / 2, 0.0), v2(pi / 2, 2.0), 2.0, init, opt);
    FAIL() << "expected NoConvergence";
  } catch (const NoConvergence& e) {
    EXPECT_EQ(e.best().iterations, 1);
    EXPECT_GT(e.best().gradient_norm, 1e-8);
  }
  EXPECT_THROW(solve_geodesic_bvp(s, v2(pi / 2, 0.0), v2(pi / 2, 2.0), 1.0, init), InvalidInput);
}

TEST(Geodesic, DiscreteEnergyGradientMatchesFiniteDifferences) {
  oracle::Gen gen(52);
  const Mat a = gen.spd(2);
  const Randers r(a, gen.covector(a, 0.4));
  std::vector<Point> nodes;
  for (int k = 0; k <= 10; ++k) nodes.push_back(v2(0.1 * k, 0.2 * std::sin(0.3 * k)));
  for (double p : {-1.0, 0.5, 2.0}) {
    const DiscreteEnergy de = discrete_energy(r, nodes, p);
    const double h = 1e-6;
    for (std::size_t k = 1; k < 10; ++k)
      for (Eigen::Index i = 0; i < 2; ++i) {
        auto up = nodes, dn = nodes;
        up[k][i] += h;
        dn[k][i] -= h;
        const double fd = (discrete_energy(r, up, p, false).value - discrete_energy(r, dn, p, false).value) / (2 * h);
        EXPECT_NEAR(de.gradient[static_cast<Eigen::Index>((k - 1) * 2) + i], fd, 1e-6);
      }
    EXPECT_LE((de.hessian - de.hessian.transpose()).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(FirstVariation, MatchesCentralDifferenceOnNonGeodesic) {
  const Euclidean e(2);
  const auto c = DiscretizedCurve::sample([](double t) { return v2(t, 0.3 * t * std::sin(pi * t)); }, 200);
  const auto X = VectorFieldAlongCurve::sample(c, [](double t) { return v2(0.0, std::pow(std::sin(pi * t), 2)); });
  for (double p : {-1.0, 0.5, 2.0, 3.0}) EXPECT_NEAR(first_variation(e, c, p, X), energy_derivative(e, c, p, X), 1e-5);
}

TEST(FirstVariation, MatchesCentralDifferenceOnRandersCurve) {
  Mat a(2, 2), w(2, 2);
  a << 1.2, 0.1, 0.1, 0.8;
  w << 0.1, 0.05, -0.05, 0.08;
  const Randers r(a, v2(0.2, -0.1), w, 1.0);
  const auto c = DiscretizedCurve::sample([](double t) { return v2(-0.5 + t, 0.3 * std::sin(3 * t) - 0.2); }, 200);
  const auto X = VectorFieldAlongCurve::sample(c, [](double t) { return v2(std::sin(pi * t), 0.5 * std::sin(2 * pi * t)); });
  for (double p : {-1.0, 0.5, 2.0, 3.0}) EXPECT_NEAR(first_variation(r, c, p, X), energy_derivative(r, c, p, X), 1e-6);
}

TEST(FirstVariation, CornerContributesOnlyTheJump) {
  const Euclidean e(2);
  const auto c = DiscretizedCurve::sample(
      [](double t) { return t <= 0.5 ? v2(2 * t, 0.0) : v2(1.0, 2 * (t - 0.5)); }, 200, {100});
  const auto X = VectorFieldAlongCurve::sample(c, [](double t) { return v2(std::sin(pi * t), 0.0); });
  for (double p : {-1.0, 0.5, 2.0, 3.0}) {
    // -g(X, F^{p-2} (c'_+ - c'_-)) with X = e1, c'_- = 2 e1, c'_+ = 2 e2
    const double expect = std::pow(2.0, p - 1.0);
    EXPECT_NEAR(first_variation(e, c, p, X), expect, 1e-10);
    EXPECT_NEAR(energy_derivative(e, c, p, X), expect, 1e-4);
    const auto fv = first_variation_field(e, c, p);
    ASSERT_EQ(fv.jump_terms.size(), 1u);
    EXPECT_NEAR(fv.jump_terms[0].t, 0.5, 1e-15);
  }
}

TEST(FirstVariation, RejectsFieldsNotVanishingAtEnds) {
  const Euclidean e(2);
  const auto c = DiscretizedCurve::sample([](double t) { return v2(t, 0.0); }, 20);
  const auto X = VectorFieldAlongCurve::sample(c, [](double) { return v2(0.0, 1.0); });
  EXPECT_THROW(first_variation(e, c, 2.0, X), InvalidInput);
}

TEST(FirstVariationProperty, ShotGeodesicsAreCriticalForEveryExponent) {
  oracle::Gen gen(53);
  const Sphere s(1.0);
  const Mat a = gen.spd(2);
  const Randers r(a, gen.covector(a, 0.4));
  const auto cs = shoot_geodesic(s, v2(1.1, 0.2), v2(0.4, 1.3), 1.0, 200);
  const auto cr = shoot_geodesic(r, v2(-0.2, 0.1), v2(0.7, 0.4), 1.0, 200);
  for (int trial = 0; trial < 10; ++trial) {
    const auto Xs = random_field(gen, cs);
    const auto Xr = random_field(gen, cr);
    for (double p : {-1.0, 0.5, 2.0, 3.0}) {
      EXPECT_LE(std::abs(first_variation(s, cs, p, Xs)), 1e-6);
      EXPECT_LE(std::abs(first_variation(r, cr, p, Xr)), 1e-6);
    }
  }
}
