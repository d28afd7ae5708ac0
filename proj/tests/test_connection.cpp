#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "fpe/connection.hpp"
#include "fpe/geodesic.hpp"
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

struct FieldRanders {
  Mat a, w;
  Vec b;
  Randers metric() const { return Randers(a, b, w, 1.0); }
  Mat g(const Vec& x, const Vec& y) const { return oracle::randers_g(a, b + w * x, y); }
};

FieldRanders random_field_randers(oracle::Gen& gen) {
  FieldRanders r;
  r.a = gen.spd(2);
  r.b = gen.covector(r.a, 0.3);
  r.w = Mat::NullaryExpr(2, 2, [&] { return gen.uniform(-0.1, 0.1); });
  return r;
}

double tensor_diff(const Tensor3& t, const std::vector<double>& flat) {
  const std::size_t n = t.dim();
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) d = std::max(d, std::abs(t(i, j, k) - flat[(i * n + j) * n + k]));
  return d;
}

// Chart components of a vector n in R^3 tangent to the unit sphere at x.
Vec chart_components(const Vec& x, const Eigen::Vector3d& n) {
  Eigen::Matrix<double, 3, 2> J;
  J << std::cos(x[0]) * std::cos(x[1]), -std::sin(x[0]) * std::sin(x[1]),
      std::cos(x[0]) * std::sin(x[1]), std::sin(x[0]) * std::cos(x[1]), -std::sin(x[0]), 0.0;
  return (J.transpose() * J).ldlt().solve(J.transpose() * n);
}

}  // namespace

TEST(Connection, SphereChristoffelSymbols) {
  const Sphere s(1.0);
  const Tensor3 gam = formal_christoffel(s, v2(pi / 4, 0.3), v2(0.4, 1.0));
  EXPECT_NEAR(gam(0, 1, 1), -0.5, 1e-12);
  EXPECT_NEAR(gam(1, 0, 1), 1.0, 1e-12);
  EXPECT_NEAR(gam(1, 1, 0), 1.0, 1e-12);
  EXPECT_NEAR(gam(0, 0, 0), 0.0, 1e-12);
  EXPECT_NEAR(gam(1, 1, 1), 0.0, 1e-12);
}

TEST(Connection, SphereNonlinearConnectionIsChristoffelTimesY) {
  oracle::Gen gen(31);
  const Sphere s(1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec x = gen.sphere_point(), y = gen.nonzero(2);
    const ConnectionSample cs = connection_sample(s, x, y);
    Matrix expect = Matrix::Zero(2, 2);
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j)
        for (std::size_t k = 0; k < 2; ++k) expect(i, j) += cs.gamma_formal(i, j, k) * y[k];
    EXPECT_LE((cs.N - expect).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((cs.L - cs.gamma_formal).max_abs(), 1e-10);
    EXPECT_LE(cs.C.max_abs(), 1e-10);
  }
}

TEST(Connection, RandersChristoffelMatchesOracle) {
  oracle::Gen gen(32);
  for (int trial = 0; trial < 3; ++trial) {
    const FieldRanders fr = random_field_randers(gen);
    const Randers r = fr.metric();
    const Vec x = gen.vec(2, -0.5, 0.5), y = gen.nonzero(2);
    const ConnectionSample cs = connection_sample(r, x, y);
    const auto ref = oracle::fd_christoffel([&](const Vec& xx) { return fr.g(xx, y); }, x);
    EXPECT_LE(tensor_diff(cs.gamma_formal, ref), 1e-7);

    auto G = [&](const Vec& xx, const Vec& yy) { return fr.g(xx, yy); };
    EXPECT_LE((spray(r, x, y) - oracle::fd_spray(G, x, y)).cwiseAbs().maxCoeff(), 1e-7);
    EXPECT_LE((cs.N - oracle::fd_nonlinear_connection(G, x, y)).cwiseAbs().maxCoeff(), 1e-5);
  }
}

TEST(Connection, RandersCartanTensorMatchesOracle) {
  oracle::Gen gen(33);
  for (int trial = 0; trial < 5; ++trial) {
    const FieldRanders fr = random_field_randers(gen);
    const Randers r = fr.metric();
    const Vec x = gen.vec(2, -0.5, 0.5), y = gen.nonzero(2);
    const ConnectionSample cs = connection_sample(r, x, y);
    // C^i_jk = 1/2 g^im d g_mj / dy^k
    const double h = 1e-5;
    const Mat gi = fr.g(x, y).inverse();
    for (std::size_t k = 0; k < 2; ++k) {
      Vec yp = y, ym = y;
      yp[static_cast<Eigen::Index>(k)] += h;
      ym[static_cast<Eigen::Index>(k)] -= h;
      const Mat ref = 0.5 * gi * (fr.g(x, yp) - fr.g(x, ym)) / (2 * h);
      for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
          EXPECT_NEAR(cs.C(i, j, k), ref(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), 1e-7);
    }
    EXPECT_GT(cs.C.max_abs(), 1e-3);
    EXPECT_LE(cs.C.contract(y, Vec::Ones(2)).norm() + cs.C.contract(y, Vec::Unit(2, 1)).norm(), 1e-10);
  }
}

TEST(ConnectionProperty, LowerIndexSymmetryAndSprayHomogeneity) {
  oracle::Gen gen(34);
  for (int trial = 0; trial < 30; ++trial) {
    const FieldRanders fr = random_field_randers(gen);
    const Randers r = fr.metric();
    const Vec x = gen.vec(2, -0.5, 0.5), y = gen.nonzero(2);
    const ConnectionSample cs = connection_sample(r, x, y);
    EXPECT_LE(cs.gamma_formal.lower_asymmetry(), 1e-10);
    EXPECT_LE(cs.L.lower_asymmetry(), 1e-10);
    EXPECT_LE(cs.C.lower_asymmetry(), 1e-10);
    // G is 2-homogeneous in y, so N y = 2 G
    EXPECT_LE((cs.N * y - 2.0 * spray(r, x, y)).norm(), 1e-10);
    const double lam = gen.uniform(0.2, 3.0);
    EXPECT_LE((spray(r, x, Vec(lam * y)) - lam * lam * spray(r, x, y)).norm(), 1e-10);
    // Gamma_combined contracted twice with y gives 2 G
    EXPECT_LE((cs.gamma_combined.contract(y, y) - 2.0 * spray(r, x, y)).norm(), 1e-9);
  }
}

TEST(Connection, ParallelNormalAlongEquatorHasVanishingDerivative) {
  const Sphere s(1.0);
  const auto c = DiscretizedCurve::sample([](double t) { return v2(pi / 2, 2 * pi * t); }, 200);
  const auto X = VectorFieldAlongCurve::sample(c, [](double) { return v2(1.0, 0.0); });
  EXPECT_LE(covariant_derivative(s, c, X).max_norm(), 1e-10);
}

TEST(Connection, ParallelNormalAlongTiltedGreatCircleConverges) {
  const Sphere s(1.0);
  const Eigen::Vector3d u(std::sin(1.0), 0.0, std::cos(1.0));
  const Eigen::Vector3d w = Eigen::Vector3d(0.2, 1.0, 0.1).cross(u).cross(u).normalized();
  const Eigen::Vector3d normal = u.cross(w);
  auto point = [&](double t) {
    const Eigen::Vector3d q = std::cos(2.0 * t) * u + std::sin(2.0 * t) * w;
    return v2(std::acos(q.z()), std::atan2(q.y(), q.x()));
  };
  auto err = [&](std::size_t N) {
    const auto c = DiscretizedCurve::sample(point, N);
    const auto X = VectorFieldAlongCurve::sample(c, [&](double t) { return chart_components(point(t), normal); });
    return covariant_derivative(s, c, X).max_norm();
  };
  const double e1 = err(100), e2 = err(200);
  EXPECT_LE(e2, 1e-3);
  EXPECT_NEAR(e1 / e2, 4.0, 1.2);
}

TEST(Connection, HorizontalFormAgreesWithCombinedForm) {
  oracle::Gen gen(35);
  const FieldRanders fr = random_field_randers(gen);
  const Randers r = fr.metric();
  const auto c = DiscretizedCurve::sample([](double t) { return v2(-0.5 + t, 0.3 * std::sin(3 * t) - 0.2); }, 100);
  const auto X = VectorFieldAlongCurve::sample(c, [](double t) { return v2(std::sin(2 * t) + 0.3, std::cos(3 * t)); });
  const auto a = covariant_derivative(r, c, X);
  const auto b = covariant_derivative_horizontal(r, c, X);
  double d = 0.0;
  for (std::size_t k = 0; k < a.segments[0].size(); ++k) d = std::max(d, (a.segments[0][k] - b.segments[0][k]).norm());
  EXPECT_LE(d, 1e-10);
}

TEST(Connection, MetricCompatibilityConvergesAtSecondOrder) {
  const auto fx = [](double t) { return v2(std::sin(2 * t) + 0.3, std::cos(3 * t)); };
  const auto fy = [](double t) { return v2(t * t - 0.5, std::exp(-t)); };
  auto residual = [&](const auto& m, const std::function<Point(double)>& curve, std::size_t N) {
    const auto c = DiscretizedCurve::sample(curve, N);
    return metric_compatibility_residual(m, c, VectorFieldAlongCurve::sample(c, fx), VectorFieldAlongCurve::sample(c, fy));
  };
  const Sphere s(1.0);
  const auto circle = [](double t) { return v2(pi / 3, 2 * pi * t); };
  const double s1 = residual(s, circle, 100), s2 = residual(s, circle, 200);
  EXPECT_NEAR(s1 / s2, 4.0, 1.2);

  Mat a(2, 2), w(2, 2);
  a << 1.2, 0.1, 0.1, 0.8;
  w << 0.1, 0.05, -0.05, 0.08;
  const Randers r(a, v2(0.2, -0.1), w, 1.0);
  const auto curve = [](double t) { return v2(-0.5 + t, 0.3 * std::sin(3 * t) - 0.2); };
  const double r1 = residual(r, curve, 100), r2 = residual(r, curve, 200);
  EXPECT_LE(r2, 1e-3);
  EXPECT_NEAR(r1 / r2, 4.0, 1.2);
}

TEST(ConnectionProperty, RandersCompatibilityOnRandomInputs) {
  oracle::Gen gen(36);
  for (int trial = 0; trial < 5; ++trial) {
    const FieldRanders fr = random_field_randers(gen);
    const Randers r = fr.metric();
    const double c0 = gen.uniform(-0.3, 0.3), c1 = gen.uniform(0.5, 1.0), c2 = gen.uniform(-0.3, 0.3);
    const auto c = DiscretizedCurve::sample([&](double t) { return v2(-0.5 + c1 * t, c0 + c2 * std::sin(3 * t)); }, 200);
    const double p0 = gen.uniform(0, 3), p1 = gen.uniform(0, 3);
    const auto X = VectorFieldAlongCurve::sample(c, [&](double t) { return v2(std::sin(2 * t + p0), std::cos(t - p1)); });
    const auto Y = VectorFieldAlongCurve::sample(c, [&](double t) { return v2(t - p1, std::sin(p0 * t)); });
    EXPECT_LE(metric_compatibility_residual(r, c, X, Y), 1e-3);
  }
}

TEST(Connection, RejectsMismatchedField) {
  const Sphere s(1.0);
  const auto c = DiscretizedCurve::sample([](double t) { return v2(pi / 2, t); }, 20);
  const auto c2 = DiscretizedCurve::sample([](double t) { return v2(pi / 2, t); }, 40);
  const auto X = VectorFieldAlongCurve::sample(c2, [](double) { return v2(1, 0); });
  EXPECT_THROW(covariant_derivative(s, c, X), InvalidInput);
}
