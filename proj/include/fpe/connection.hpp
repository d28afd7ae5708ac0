#pragma once

// Cartan connection coefficients and the covariant derivative along curves.

#include <vector>

#include "fpe/curve.hpp"
#include "fpe/detail/kernels.hpp"
#include "fpe/metric.hpp"

namespace fpe {

/// All connection coefficients at one line element (x, y).
struct ConnectionSample {
  Point x;
  Tangent y;
  Matrix g;
  Matrix g_inv;
  Tensor3 gamma_formal;    // Christoffel symbols of g(., y) at fixed y
  Matrix N;                // nonlinear connection N^i_j
  Tensor3 L;               // horizontal coefficients L^i_jk
  Tensor3 C;               // vertical coefficients C^i_jk
  Tensor3 gamma_combined;  // L^i_mk + C^i_ml N^l_k
};

namespace detail {

template <DifferentiableMetric M>
auto tensor_kernel(const M& m) {
  return [&m](const auto& xx, const auto& yy) { return fundamental_tensor(m, xx, yy); };
}

// 1/2 g^im (D_j g_mk + D_k g_jm - D_m g_jk) for a family of derivative
// matrices D_j g.
inline Tensor3 christoffel_combination(const Matrix& g_inv, const std::vector<Matrix>& dg) {
  const std::size_t n = dg.size();
  Tensor3 out(n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t m = 0; m < n; ++m) {
        const auto mi = static_cast<Eigen::Index>(m);
        const auto ji = static_cast<Eigen::Index>(j);
        const auto ki = static_cast<Eigen::Index>(k);
        const double lowered = 0.5 * (dg[j](mi, ki) + dg[k](ji, mi) - dg[m](ji, ki));
        for (std::size_t i = 0; i < n; ++i) out(i, j, k) += g_inv(static_cast<Eigen::Index>(i), mi) * lowered;
      }
  return out;
}

}  // namespace detail

template <DifferentiableMetric M>
ConnectionSample connection_sample(const M& m, const Point& x, const Tangent& y) {
  ConnectionSample s;
  s.x = x;
  s.y = y;
  s.g = fundamental_tensor(m, x, y);
  s.g_inv = s.g.inverse();
  const std::size_t n = m.dim();
  const auto xs = to_std(x);
  const auto ys = to_std(y);
  const auto kernel = detail::tensor_kernel(m);

  std::vector<Matrix> dgdx(n), dgdy(n);
  for (std::size_t j = 0; j < n; ++j) {
    dgdx[j] = detail::to_matrix(detail::partial(kernel, xs, ys, j, false), n);
    dgdy[j] = detail::to_matrix(detail::partial(kernel, xs, ys, j, true), n);
  }
  s.N = detail::to_matrix(detail::nonlinear_connection(m, xs, ys), n);

  s.gamma_formal = detail::christoffel_combination(s.g_inv, dgdx);
  s.C = detail::christoffel_combination(s.g_inv, dgdy);

  std::vector<Matrix> delta(n);
  for (std::size_t j = 0; j < n; ++j) {
    delta[j] = dgdx[j];
    for (std::size_t l = 0; l < n; ++l)
      delta[j] -= s.N(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(j)) * dgdy[l];
  }
  s.L = detail::christoffel_combination(s.g_inv, delta);

  s.gamma_combined = Tensor3(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t mm = 0; mm < n; ++mm)
      for (std::size_t k = 0; k < n; ++k) {
        double v = s.L(i, mm, k);
        for (std::size_t l = 0; l < n; ++l)
          v += s.C(i, mm, l) * s.N(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k));
        s.gamma_combined(i, mm, k) = v;
      }
  return s;
}

template <DifferentiableMetric M>
Tensor3 formal_christoffel(const M& m, const Point& x, const Tangent& y) {
  return connection_sample(m, x, y).gamma_formal;
}

template <DifferentiableMetric M>
Matrix nonlinear_connection(const M& m, const Point& x, const Tangent& y) {
  detail::check_point(m, x);
  detail::check_tangent(m, y);
  return detail::to_matrix(detail::nonlinear_connection(m, to_std(x), to_std(y)), m.dim());
}

template <DifferentiableMetric M>
Tensor3 cartan_L(const M& m, const Point& x, const Tangent& y) {
  return connection_sample(m, x, y).L;
}

template <DifferentiableMetric M>
Tensor3 cartan_C(const M& m, const Point& x, const Tangent& y) {
  return connection_sample(m, x, y).C;
}

template <DifferentiableMetric M>
Tensor3 gamma_combined(const M& m, const Point& x, const Tangent& y) {
  return connection_sample(m, x, y).gamma_combined;
}

/// Spray coefficients G^i(x, y); geodesics satisfy c'' + 2 G(c, c') = 0.
template <DifferentiableMetric M>
Tangent spray(const M& m, const Point& x, const Tangent& y) {
  return to_eigen(detail::spray(m, to_std(x), to_std(y)));
}

namespace detail {

struct CurveDerivatives {
  std::vector<Tangent> x, v, a, dX;
};

inline CurveDerivatives segment_data(const DiscretizedCurve& c, const Segment& s, const std::vector<Tangent>& X) {
  if (X.size() != s.size()) throw InvalidInput("field does not match the curve segments");
  CurveDerivatives d;
  d.x = gather<Tangent>(c, s);
  d.v = derivative4(d.x, c.spacing());
  d.a = second_derivative2(d.x, c.spacing());
  d.dX = derivative2(X, c.spacing());
  return d;
}

inline void check_field(const DiscretizedCurve& c, const VectorFieldAlongCurve& X) {
  if (X.segments.size() != c.segments().size()) throw InvalidInput("field does not match the curve segments");
  for (std::size_t q = 0; q < X.segments.size(); ++q)
    if (X.segments[q].size() != c.segments()[q].size()) throw InvalidInput("field does not match the curve segments");
}

}  // namespace detail

/// nabla X / dt = dX/dt + X^m (Gamma^i_mk c'^k + C^i_mk c''^k), with
/// coefficients at (c, c'), dX/dt and c'' by second-order differences.
/// Values at segment ends use one-sided stencils.
template <DifferentiableMetric M>
VectorFieldAlongCurve covariant_derivative(const M& m, const DiscretizedCurve& c, const VectorFieldAlongCurve& X) {
  check_in_domain(m, c);
  detail::check_field(c, X);
  VectorFieldAlongCurve out;
  for (std::size_t q = 0; q < c.segments().size(); ++q) {
    const auto d = detail::segment_data(c, c.segments()[q], X.segments[q]);
    std::vector<Tangent> seg(d.x.size());
    for (std::size_t k = 0; k < d.x.size(); ++k) {
      const ConnectionSample cs = connection_sample(m, d.x[k], d.v[k]);
      const Tangent& Xk = X.segments[q][k];
      seg[k] = d.dX[k] + cs.gamma_combined.contract(Xk, d.v[k]) + cs.C.contract(Xk, d.a[k]);
    }
    out.segments.push_back(std::move(seg));
  }
  return out;
}

/// Same derivative through the horizontal form
/// dX/dt + X^m (L^i_mk c'^k + C^i_mk (c''^k + N^k_l c'^l)).
template <DifferentiableMetric M>
VectorFieldAlongCurve covariant_derivative_horizontal(const M& m, const DiscretizedCurve& c,
                                                      const VectorFieldAlongCurve& X) {
  check_in_domain(m, c);
  detail::check_field(c, X);
  VectorFieldAlongCurve out;
  for (std::size_t q = 0; q < c.segments().size(); ++q) {
    const auto d = detail::segment_data(c, c.segments()[q], X.segments[q]);
    std::vector<Tangent> seg(d.x.size());
    for (std::size_t k = 0; k < d.x.size(); ++k) {
      const ConnectionSample cs = connection_sample(m, d.x[k], d.v[k]);
      const Tangent& Xk = X.segments[q][k];
      const Tangent delta_v = d.a[k] + cs.N * d.v[k];
      seg[k] = d.dX[k] + cs.L.contract(Xk, d.v[k]) + cs.C.contract(Xk, delta_v);
    }
    out.segments.push_back(std::move(seg));
  }
  return out;
}

/// max over interior segment nodes of
/// |d/dt g(X, Y) - g(nabla X, Y) - g(X, nabla Y)|, with g taken at (c, c').
template <DifferentiableMetric M>
double metric_compatibility_residual(const M& m, const DiscretizedCurve& c, const VectorFieldAlongCurve& X,
                                     const VectorFieldAlongCurve& Y) {
  const auto dX = covariant_derivative(m, c, X);
  const auto dY = covariant_derivative(m, c, Y);
  const double h = c.spacing();
  double worst = 0.0;
  for (std::size_t q = 0; q < c.segments().size(); ++q) {
    const auto& s = c.segments()[q];
    const auto v = segment_velocities(c, s);
    std::vector<Matrix> g(s.size());
    std::vector<double> prod(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
      g[k] = fundamental_tensor(m, c.node(s.first + k), v[k]);
      prod[k] = X.segments[q][k].dot(g[k] * Y.segments[q][k]);
    }
    for (std::size_t k = 1; k + 1 < s.size(); ++k) {
      const double lhs = (prod[k + 1] - prod[k - 1]) / (2.0 * h);
      const double rhs = dX.segments[q][k].dot(g[k] * Y.segments[q][k]) + X.segments[q][k].dot(g[k] * dY.segments[q][k]);
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  }
  return worst;
}

}  // namespace fpe
