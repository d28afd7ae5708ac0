#pragma once

// Finsler metric contract, fundamental tensor, scalar product along curves
// and randomized axiom validation.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "fpe/detail/kernels.hpp"
#include "fpe/dual.hpp"
#include "fpe/types.hpp"

namespace fpe {

/// A metric supplies its dimension, the fundamental function F(x, y) at
/// double precision and a chart-domain predicate.
template <class M>
concept FinslerMetric = requires(const M& m, const Point& x, std::span<const double> s) {
  { m.dim() } -> std::convertible_to<std::size_t>;
  { m.F(s, s) } -> std::convertible_to<double>;
  { m.in_domain(x) } -> std::convertible_to<bool>;
};

/// A metric whose F can be evaluated on nested dual numbers. All connection
/// and curvature quantities are derived from F this way.
template <class M>
concept DifferentiableMetric = FinslerMetric<M> && requires(const M& m, std::span<const Dual<Dual<double>>> s) {
  { m.F(s, s) } -> std::same_as<Dual<Dual<double>>>;
};

template <class M>
concept HasAnalyticTensor = requires(const M& m, const Point& x, const Tangent& y) {
  { m.analytic_tensor(x, y) } -> std::convertible_to<Matrix>;
};

template <class M>
concept SamplableMetric = FinslerMetric<M> && requires(const M& m, std::mt19937_64& rng) {
  { m.sample_point(rng) } -> std::convertible_to<Point>;
};

template <FinslerMetric M>
bool is_riemannian(const M& m) {
  if constexpr (requires { { m.riemannian() } -> std::convertible_to<bool>; }) {
    return m.riemannian();
  } else {
    return false;
  }
}

/// Sectional curvature constant K, when the metric declares one.
template <FinslerMetric M>
std::optional<double> constant_curvature(const M& m) {
  if constexpr (requires { { m.constant_curvature() } -> std::convertible_to<std::optional<double>>; }) {
    return m.constant_curvature();
  } else {
    return std::nullopt;
  }
}

template <FinslerMetric M>
double finsler_norm(const M& m, const Point& x, const Tangent& y) {
  return m.F(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
             std::span<const double>(y.data(), static_cast<std::size_t>(y.size())));
}

namespace detail {

template <FinslerMetric M>
void check_point(const M& m, const Point& x) {
  if (static_cast<std::size_t>(x.size()) != m.dim()) throw InvalidInput("point dimension mismatch");
  if (!x.allFinite() || !m.in_domain(x)) throw ChartDomain();
}

template <FinslerMetric M>
void check_tangent(const M& m, const Tangent& y) {
  if (static_cast<std::size_t>(y.size()) != m.dim()) throw InvalidInput("tangent dimension mismatch");
  if (!y.allFinite()) throw InvalidInput("non-finite tangent");
  if (y.norm() < kMinSpeed) throw ZeroVelocity();
}

inline Matrix to_matrix(const std::vector<double>& v, std::size_t n) {
  Matrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[i * n + j];
  return out;
}

}  // namespace detail

/// Central-difference Hessian of F^2 in y: step h = max(1e-5, 1e-5 |y|) by
/// default, mixed partials by the 4-point stencil. Used for metrics without
/// a differentiable evaluator and as an independent oracle in tests.
template <FinslerMetric M>
Matrix fd_fundamental_tensor(const M& m, const Point& x, const Tangent& y, double step_scale = 1e-5) {
  const auto n = static_cast<Eigen::Index>(m.dim());
  const double h = std::max(step_scale, step_scale * y.norm());
  auto f2 = [&](const Tangent& yy) {
    const double f = finsler_norm(m, x, yy);
    return f * f;
  };
  Matrix hess(n, n);
  const double f0 = f2(y);
  for (Eigen::Index i = 0; i < n; ++i) {
    Tangent yp = y;
    Tangent ym = y;
    yp[i] += h;
    ym[i] -= h;
    hess(i, i) = (f2(yp) - 2.0 * f0 + f2(ym)) / (h * h);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      Tangent ypp = y, ypm = y, ymp = y, ymm = y;
      ypp[i] += h; ypp[j] += h;
      ypm[i] += h; ypm[j] -= h;
      ymp[i] -= h; ymp[j] += h;
      ymm[i] -= h; ymm[j] -= h;
      hess(i, j) = (f2(ypp) - f2(ypm) - f2(ymp) + f2(ymm)) / (4.0 * h * h);
      hess(j, i) = hess(i, j);
    }
  }
  return 0.5 * hess;
}

/// g_ij(x, y) without the definiteness check. Analytic evaluator first, then
/// exact derivatives through dual numbers, then the finite-difference engine.
template <FinslerMetric M>
Matrix raw_fundamental_tensor(const M& m, const Point& x, const Tangent& y) {
  if constexpr (HasAnalyticTensor<M>) {
    return m.analytic_tensor(x, y);
  } else if constexpr (requires { m.tensor_evaluator(); }) {
    if (m.tensor_evaluator()) return m.tensor_evaluator()(x, y);
    return fd_fundamental_tensor(m, x, y);
  } else if constexpr (DifferentiableMetric<M>) {
    return detail::to_matrix(detail::fundamental_tensor(m, to_std(x), to_std(y)), m.dim());
  } else {
    return fd_fundamental_tensor(m, x, y);
  }
}

inline constexpr double kDefinitenessTolerance = 1e-10;

/// Smallest over largest eigenvalue of a symmetric matrix.
inline double definiteness_ratio(const Matrix& g) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (g + g.transpose()), Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double largest = ev.cwiseAbs().maxCoeff();
  if (largest == 0.0) return 0.0;
  return ev.minCoeff() / largest;
}

template <FinslerMetric M>
Matrix fundamental_tensor(const M& m, const Point& x, const Tangent& y) {
  detail::check_point(m, x);
  detail::check_tangent(m, y);
  Matrix g = raw_fundamental_tensor(m, x, y);
  if (!(definiteness_ratio(g) > kDefinitenessTolerance))
    throw NotPositiveDefinite("fundamental tensor is not positive definite");
  return g;
}

/// |F^2(x, y) - g_ij(x, y) y^i y^j|
template <FinslerMetric M>
double absolute_energy_check(const M& m, const Point& x, const Tangent& y) {
  const Matrix g = fundamental_tensor(m, x, y);
  const double f = finsler_norm(m, x, y);
  return std::abs(f * f - y.dot(g * y));
}

/// g(X, Y) along a curve, with v_ref playing the role of the curve velocity.
template <FinslerMetric M>
double scalar_product(const M& m, const Point& x, const Tangent& v_ref, const Tangent& X, const Tangent& Y) {
  return X.dot(fundamental_tensor(m, x, v_ref) * Y);
}

struct AxiomCheck {
  std::string name;
  double max_violation = 0.0;
  double tolerance = 0.0;
  std::size_t failures = 0;
  bool passed = true;
};

struct ValidationReport {
  std::size_t samples = 0;
  std::vector<AxiomCheck> checks;
  bool passed = true;

  const AxiomCheck* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

struct ValidationTolerances {
  double homogeneity = 1e-9;
  double euler = 1e-6;
  double definiteness = kDefinitenessTolerance;
  double tensor_homogeneity = 1e-6;
  double riemannian_independence = 1e-8;
};

/// Randomized checks of positivity, absolute homogeneity F(x, ly) = |l| F(x, y)
/// for l in [-3, 3], positive homogeneity (l > 0 only; the weaker property
/// non-reversible metrics such as Randers still have), positive definiteness
/// of g, the Euler identity F^2 = g_ij y^i y^j and degree-zero homogeneity
/// of g. Riemannian metrics additionally get a y-independence
/// check. Failures are report entries, never exceptions.
template <SamplableMetric M>
ValidationReport validate_metric(const M& m, std::size_t samples, std::uint64_t seed,
                                 const ValidationTolerances& tol = {}) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> lambda_dist(-3.0, 3.0);
  std::uniform_real_distribution<double> pos_lambda(0.1, 3.0);
  const auto n = static_cast<Eigen::Index>(m.dim());

  AxiomCheck f1{"F1_positivity", 0.0, 0.0};
  AxiomCheck f2{"F2_homogeneity", 0.0, tol.homogeneity};
  AxiomCheck f2p{"F2_positive_homogeneity", 0.0, tol.homogeneity};
  AxiomCheck f3{"F3_positive_definite", 0.0, tol.definiteness};
  AxiomCheck euler{"euler_identity", 0.0, tol.euler};
  AxiomCheck g0{"tensor_zero_homogeneity", 0.0, tol.tensor_homogeneity};
  AxiomCheck riem{"riemannian_y_independence", 0.0, tol.riemannian_independence};
  const bool riemannian = is_riemannian(m);

  auto random_tangent = [&] {
    Tangent y(n);
    do {
      for (Eigen::Index i = 0; i < n; ++i) y[i] = normal(rng);
    } while (y.norm() < 0.1);
    return y;
  };

  for (std::size_t s = 0; s < samples; ++s) {
    const Point x = m.sample_point(rng);
    const Tangent y = random_tangent();
    double lambda = 0.0;
    do {
      lambda = lambda_dist(rng);
    } while (std::abs(lambda) < 1e-3);

    const double fy = finsler_norm(m, x, y);
    if (!(fy > 0.0)) {
      ++f1.failures;
      f1.max_violation = std::max(f1.max_violation, -fy / y.norm());
    }
    const double fl = finsler_norm(m, x, Tangent(lambda * y));
    const double hom = std::abs(fl - std::abs(lambda) * fy) / (1.0 + std::abs(fy));
    f2.max_violation = std::max(f2.max_violation, hom);
    if (hom > tol.homogeneity) ++f2.failures;
    const double fp = finsler_norm(m, x, Tangent(std::abs(lambda) * y));
    const double phom = std::abs(fp - std::abs(lambda) * fy) / (1.0 + std::abs(fy));
    f2p.max_violation = std::max(f2p.max_violation, phom);
    if (phom > tol.homogeneity) ++f2p.failures;

    const Matrix g = raw_fundamental_tensor(m, x, y);
    const double ratio = definiteness_ratio(g);
    if (!(ratio > tol.definiteness)) {
      ++f3.failures;
      f3.max_violation = std::max(f3.max_violation, tol.definiteness - ratio);
    }
    const double eu = std::abs(fy * fy - y.dot(g * y));
    euler.max_violation = std::max(euler.max_violation, eu);
    if (eu > tol.euler) ++euler.failures;

    const double mu = pos_lambda(rng);
    const Matrix gs = raw_fundamental_tensor(m, x, Tangent(mu * y));
    const double zh = (gs - g).cwiseAbs().maxCoeff() / (1.0 + g.cwiseAbs().maxCoeff());
    g0.max_violation = std::max(g0.max_violation, zh);
    if (zh > tol.tensor_homogeneity) ++g0.failures;

    if (riemannian) {
      const Matrix g2 = raw_fundamental_tensor(m, x, random_tangent());
      const double d = (g2 - g).cwiseAbs().maxCoeff();
      riem.max_violation = std::max(riem.max_violation, d);
      if (d > tol.riemannian_independence) ++riem.failures;
    }
  }

  ValidationReport report;
  report.samples = samples;
  report.checks = {f1, f2, f2p, f3, euler, g0};
  if (riemannian) report.checks.push_back(riem);
  for (auto& c : report.checks) {
    c.passed = c.failures == 0;
    report.passed = report.passed && c.passed;
  }
  return report;
}

}  // namespace fpe
