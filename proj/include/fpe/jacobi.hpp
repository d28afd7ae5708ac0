#pragma once

// Curvature of the nonlinear connection, parallel frames along geodesics,
// Jacobi fields, conjugate points and the constant-curvature results.

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/SVD>

#include "fpe/connection.hpp"
#include "fpe/geodesic.hpp"

namespace fpe {

struct CurvatureSample {
  Tensor3 R;  // R^i_jk = dN^i_j/dx^k - dN^i_k/dx^j with horizontal derivatives
};

template <DifferentiableMetric M>
CurvatureSample curvature_R(const M& m, const Point& x, const Tangent& y) {
  detail::check_point(m, x);
  detail::check_tangent(m, y);
  const std::size_t n = m.dim();
  const auto xs = to_std(x);
  const auto ys = to_std(y);
  const auto kernel = [&m](const auto& xx, const auto& yy) { return detail::nonlinear_connection(m, xx, yy); };
  const Matrix N = detail::to_matrix(detail::nonlinear_connection(m, xs, ys), n);
  std::vector<Matrix> dNdx(n), dNdy(n);
  for (std::size_t k = 0; k < n; ++k) {
    dNdx[k] = detail::to_matrix(detail::partial(kernel, xs, ys, k, false), n);
    dNdy[k] = detail::to_matrix(detail::partial(kernel, xs, ys, k, true), n);
  }
  // horizontal derivative of N along x^k
  std::vector<Matrix> dN(n);
  for (std::size_t k = 0; k < n; ++k) {
    dN[k] = dNdx[k];
    for (std::size_t l = 0; l < n; ++l)
      dN[k] -= N(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) * dNdy[l];
  }
  CurvatureSample out{Tensor3(n)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) {
        const auto ii = static_cast<Eigen::Index>(i);
        out.R(i, j, k) = dN[k](ii, static_cast<Eigen::Index>(j)) - dN[j](ii, static_cast<Eigen::Index>(k));
      }
  return out;
}

/// R2(X, v) v = R^l_jk v^j X^k
template <DifferentiableMetric M>
Tangent R2_operator(const M& m, const Point& x, const Tangent& v, const Tangent& X) {
  return curvature_R(m, x, v).R.contract(v, X);
}

/// K (F(v)^2 X - g_v(X, v) v)
template <FinslerMetric M>
Tangent constant_curvature_R2(double K, const M& m, const Point& x, const Tangent& v, const Tangent& X) {
  const Matrix g = fundamental_tensor(m, x, v);
  return K * (v.dot(g * v) * X - X.dot(g * v) * v);
}

/// Frame E_0 = c'/F(c'), E_1..E_{n-1} parallel along a geodesic and
/// orthonormal for g(c, c'). Columns of `E[k]` hold the frame at node k.
struct ParallelFrame {
  std::vector<Matrix> E;
  std::vector<Matrix> dE;          // coordinate derivative dE/dt
  std::vector<Matrix> curvature;   // K(a, b) = g(R2(E_b, c') c', E_a)
  std::vector<Point> x;
  std::vector<Tangent> v;
  double speed = 0.0;              // mean F(c')
};

namespace detail {

// RK4 with step 2h for y' = f(k, y), where f is available at every grid node
// k and the midpoint of a double step is the odd node in between. Odd nodes
// are filled by cubic Hermite interpolation from the neighbouring even nodes.
template <class State, class Rhs>
std::pair<std::vector<State>, std::vector<State>> integrate_on_grid(const State& y0, std::size_t N, double h, Rhs&& f) {
  std::vector<State> y(N + 1), dy(N + 1);
  y[0] = y0;
  for (std::size_t k = 0; k + 2 <= N; k += 2) {
    const double dt = 2.0 * h;
    const State k1 = f(k, y[k]);
    const State k2 = f(k + 1, State(y[k] + 0.5 * dt * k1));
    const State k3 = f(k + 1, State(y[k] + 0.5 * dt * k2));
    const State k4 = f(k + 2, State(y[k] + dt * k3));
    dy[k] = k1;
    y[k + 2] = y[k] + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  dy[N] = f(N, y[N]);
  for (std::size_t k = 1; k < N; k += 2) {
    const double dt = 2.0 * h;
    y[k] = 0.5 * (y[k - 1] + y[k + 1]) + dt / 8.0 * (dy[k - 1] - dy[k + 1]);
    dy[k] = f(k, y[k]);
  }
  return {std::move(y), std::move(dy)};
}

inline Eigen::VectorXd hermite(const Eigen::VectorXd& y0, const Eigen::VectorXd& d0, const Eigen::VectorXd& y1,
                               const Eigen::VectorXd& d1, double h, double s) {
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * d0 + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * d1;
}

}  // namespace detail

template <DifferentiableMetric M>
ParallelFrame parallel_frame(const M& m, const DiscretizedCurve& c) {
  require_geodesic(m, c);
  const std::size_t N = c.intervals();
  const auto n = static_cast<Eigen::Index>(c.dim());
  ParallelFrame fr;
  fr.x = c.nodes();
  fr.v = segment_velocities(c, c.segments().front());
  std::vector<Matrix> A(N + 1);  // dE/dt = -A E
  std::vector<Matrix> g(N + 1);
  for (std::size_t k = 0; k <= N; ++k) {
    const ConnectionSample cs = connection_sample(m, fr.x[k], fr.v[k]);
    const Tangent acc = -2.0 * spray(m, fr.x[k], fr.v[k]);
    g[k] = cs.g;
    A[k] = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index mm = 0; mm < n; ++mm)
        for (Eigen::Index kk = 0; kk < n; ++kk) {
          const auto iu = static_cast<std::size_t>(i), mu = static_cast<std::size_t>(mm), ku = static_cast<std::size_t>(kk);
          A[k](i, mm) += cs.gamma_combined(iu, mu, ku) * fr.v[k][kk] + cs.C(iu, mu, ku) * acc[kk];
        }
    fr.speed += std::sqrt(fr.v[k].dot(g[k] * fr.v[k]));
  }
  fr.speed /= static_cast<double>(N + 1);

  // g-orthonormal start frame with E_0 along c'
  Matrix E0(n, n);
  E0.col(0) = fr.v[0] / std::sqrt(fr.v[0].dot(g[0] * fr.v[0]));
  Eigen::Index filled = 1;
  for (Eigen::Index e = 0; e < n && filled < n; ++e) {
    Tangent w = Tangent::Unit(n, e);
    for (Eigen::Index q = 0; q < filled; ++q) w -= E0.col(q).dot(g[0] * w) * E0.col(q);
    const double nw = std::sqrt(std::max(0.0, w.dot(g[0] * w)));
    if (nw < 1e-6) continue;
    E0.col(filled++) = w / nw;
  }

  auto [E, dE] = detail::integrate_on_grid(E0, N, c.spacing(),
                                           [&](std::size_t k, const Matrix& e) -> Matrix { return -A[k] * e; });
  fr.E = std::move(E);
  fr.dE = std::move(dE);
  fr.curvature.resize(N + 1);
  for (std::size_t k = 0; k <= N; ++k) {
    const CurvatureSample cv = curvature_R(m, fr.x[k], fr.v[k]);
    Matrix RE(n, n);
    for (Eigen::Index b = 0; b < n; ++b) RE.col(b) = cv.R.contract(fr.v[k], fr.E[k].col(b));
    fr.curvature[k] = fr.E[k].transpose() * g[k] * RE;
  }
  return fr;
}

/// Jacobi field in frame coordinates xi (X = E xi) with xi'' = -K(t) xi.
struct JacobiField {
  VectorFieldAlongCurve X;
  std::vector<Eigen::VectorXd> xi;
  std::vector<Eigen::VectorXd> xi_dot;
};

namespace detail {

inline std::pair<std::vector<Matrix>, std::vector<Matrix>> integrate_jacobi_frame(const ParallelFrame& fr,
                                                                                   const Matrix& J0, const Matrix& Jd0) {
  const std::size_t N = fr.E.size() - 1;
  const double h = 1.0 / static_cast<double>(N);
  const auto n = J0.rows();
  const auto cols = J0.cols();
  Matrix z0(2 * n, cols);
  z0 << J0, Jd0;
  auto [z, dz] = integrate_on_grid(z0, N, h, [&](std::size_t k, const Matrix& s) -> Matrix {
    Matrix out(2 * n, cols);
    out.topRows(n) = s.bottomRows(n);
    out.bottomRows(n) = -fr.curvature[k] * s.topRows(n);
    return out;
  });
  std::vector<Matrix> J(N + 1), Jd(N + 1);
  for (std::size_t k = 0; k <= N; ++k) {
    J[k] = z[k].topRows(n);
    Jd[k] = z[k].bottomRows(n);
  }
  return {std::move(J), std::move(Jd)};
}

}  // namespace detail

/// Jacobi field along a geodesic with X(0) = X0 and nabla X/dt (0) = Xdot0.
template <DifferentiableMetric M>
JacobiField integrate_jacobi(const M& m, const DiscretizedCurve& c, const Tangent& X0, const Tangent& Xdot0) {
  const ParallelFrame fr = parallel_frame(m, c);
  const Matrix g0 = fundamental_tensor(m, fr.x[0], fr.v[0]);
  const Matrix to_frame = fr.E[0].transpose() * g0;
  auto [J, Jd] = detail::integrate_jacobi_frame(fr, to_frame * X0, to_frame * Xdot0);
  JacobiField out;
  std::vector<Tangent> values(J.size());
  for (std::size_t k = 0; k < J.size(); ++k) {
    out.xi.push_back(J[k].col(0));
    out.xi_dot.push_back(Jd[k].col(0));
    values[k] = fr.E[k] * J[k].col(0);
  }
  out.X = VectorFieldAlongCurve::from_nodes(c, values);
  return out;
}

/// Orthogonal Jacobi matrix: columns start at J(0) = 0 with derivatives
/// E_1..E_{n-1}; rows are the orthogonal frame components.
struct JacobiSolution {
  std::vector<double> params;
  std::vector<Matrix> J;
  std::vector<Matrix> J_dot;
  std::vector<double> determinant_series;
  ParallelFrame frame;

  Matrix at(double t) const {
    const std::size_t N = params.size() - 1;
    const double h = 1.0 / static_cast<double>(N);
    std::size_t k = std::min(N - 1, static_cast<std::size_t>(std::floor(t / h)));
    const double s = (t - params[k]) / h;
    const auto r = J[k].rows(), cc = J[k].cols();
    const Eigen::VectorXd y = detail::hermite(J[k].reshaped(), J_dot[k].reshaped(), J[k + 1].reshaped(),
                                              J_dot[k + 1].reshaped(), h, s);
    return y.reshaped(r, cc);
  }
  double det(double t) const { return at(t).determinant(); }
};

template <DifferentiableMetric M>
JacobiSolution orthogonal_jacobi(const M& m, const DiscretizedCurve& c) {
  JacobiSolution sol;
  sol.frame = parallel_frame(m, c);
  const auto n = static_cast<Eigen::Index>(c.dim());
  Matrix J0 = Matrix::Zero(n, n - 1);
  Matrix Jd0 = Matrix::Zero(n, n - 1);
  Jd0.bottomRows(n - 1) = Matrix::Identity(n - 1, n - 1);
  auto [J, Jd] = detail::integrate_jacobi_frame(sol.frame, J0, Jd0);
  for (std::size_t k = 0; k < J.size(); ++k) {
    sol.params.push_back(c.param(k));
    sol.J.push_back(J[k].bottomRows(n - 1));
    sol.J_dot.push_back(Jd[k].bottomRows(n - 1));
    sol.determinant_series.push_back(sol.J.back().determinant());
  }
  return sol;
}

struct ConjugatePoint {
  double t = 0.0;
  int multiplicity = 1;
  bool tangency = false;  // |det| touches zero without changing sign
};

struct ConjugateReport {
  std::vector<ConjugatePoint> points;  // interior, sorted
  bool endpoint_conjugate = false;
  double refinement_tol = 1e-8;

  std::size_t m() const { return points.size(); }
  std::vector<double> params() const {
    std::vector<double> out;
    for (const auto& p : points) out.push_back(p.t);
    return out;
  }
};

struct ConjugateOptions {
  double refinement_tol = 1e-8;
  double tangency_tol = 1e-10;   // relative to max |det|
  double endpoint_tol = 1e-6;    // distance in t below which a zero counts as the endpoint
};

/// Zeros of det J(t) on (0, 1): sign changes refined by bisection, and
/// touching zeros found as local minima of |det| below tangency_tol.
template <DifferentiableMetric M>
ConjugateReport find_conjugate_points(const M& m, const DiscretizedCurve& c, const ConjugateOptions& opt = {}) {
  const JacobiSolution sol = orthogonal_jacobi(m, c);
  const auto& d = sol.determinant_series;
  const std::size_t N = d.size() - 1;
  double scale = 0.0;
  double jscale = 0.0;
  for (std::size_t k = 0; k <= N; ++k) {
    scale = std::max(scale, std::abs(d[k]));
    jscale = std::max(jscale, sol.J[k].norm());
  }
  ConjugateReport rep;
  rep.refinement_tol = opt.refinement_tol;
  if (scale == 0.0) return rep;

  auto multiplicity = [&](double t) {
    Eigen::JacobiSVD<Matrix> svd(sol.at(t));
    int count = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()[i] <= 1e-4 * jscale) ++count;
    return std::max(count, 1);
  };
  std::vector<ConjugatePoint> found;
  auto add = [&](double t, bool tangency) {
    if (t >= 1.0 - opt.endpoint_tol) {
      rep.endpoint_conjugate = true;
      return;
    }
    if (!found.empty() && t - found.back().t < 2.0 * opt.refinement_tol) return;
    found.push_back({t, multiplicity(t), tangency});
  };
  auto sgn = [](double v) { return (v > 0.0) - (v < 0.0); };

  for (std::size_t k = 1; k <= N; ++k) {
    const double a = d[k - 1], b = d[k];
    if (k - 1 > 0 && a == 0.0) continue;
    if (b == 0.0 && k < N) {
      add(sol.params[k], false);
      continue;
    }
    if (k - 1 > 0 && sgn(a) * sgn(b) < 0) {
      double lo = sol.params[k - 1], hi = sol.params[k];
      const int slo = sgn(a);
      while (hi - lo > opt.refinement_tol) {
        const double mid = 0.5 * (lo + hi);
        if (sgn(sol.det(mid)) == slo)
          lo = mid;
        else
          hi = mid;
      }
      add(0.5 * (lo + hi), false);
    }
    if (k < N && k >= 2) {
      const double am = std::abs(d[k - 1]), bm = std::abs(b), cm = std::abs(d[k + 1]);
      if (bm <= am && bm <= cm && sgn(d[k - 1]) == sgn(d[k + 1]) && sgn(b) == sgn(d[k - 1])) {
        double lo = sol.params[k - 1], hi = sol.params[k + 1];
        const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
        while (hi - lo > opt.refinement_tol) {
          const double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
          if (std::abs(sol.det(x1)) < std::abs(sol.det(x2)))
            hi = x2;
          else
            lo = x1;
        }
        const double t = 0.5 * (lo + hi);
        if (std::abs(sol.det(t)) <= opt.tangency_tol * scale) add(t, true);
      }
    }
  }
  double jdot_scale = 0.0;
  for (const auto& jd : sol.J_dot) jdot_scale = std::max(jdot_scale, jd.norm());
  Eigen::JacobiSVD<Matrix> end_svd(sol.J[N]);
  if (end_svd.singularValues().minCoeff() <= opt.endpoint_tol * jdot_scale) rep.endpoint_conjugate = true;
  std::sort(found.begin(), found.end(), [](const auto& x, const auto& y) { return x.t < y.t; });
  rep.points = std::move(found);
  return rep;
}

/// Bounds on E_p at a global extremum on a manifold of constant curvature
/// K > 0 whose geodesics carry m conjugate points:
///   p < 0:      [((m+1) pi / sqrt K)^p, (m pi / sqrt K)^p]
///   0 < p < 1:  [(m pi / sqrt K)^p, ((m+1) pi / sqrt K)^p]
inline std::pair<double, double> ep_extremum_bounds(double K, int m_count, double p) {
  if (!(K > 0.0)) throw InvalidInput("curvature must be positive");
  if (m_count < 1) throw InvalidInput("conjugate count must be at least 1");
  if (!(p < 0.0 || (p > 0.0 && p < 1.0))) throw BadRegime("bounds hold only for p < 0 or 0 < p < 1");
  const double a = std::pow(m_count * std::numbers::pi / std::sqrt(K), p);
  const double b = std::pow((m_count + 1) * std::numbers::pi / std::sqrt(K), p);
  return {std::min(a, b), std::max(a, b)};
}

}  // namespace fpe
