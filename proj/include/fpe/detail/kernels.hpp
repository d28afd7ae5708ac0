#pragma once

// Scalar-generic derivative kernels. Every function here is templated on the
// scalar type T so that it can itself be differentiated by wrapping T in a
// Dual; this is how derivatives of N (needed for curvature) are obtained
// without nested finite differences.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "fpe/dual.hpp"

namespace fpe::detail {

template <class T>
using Vec = std::vector<T>;

template <class M, class T>
concept HasEnergy = requires(const M& m, std::span<const T> s) {
  { m.F2(s, s) } -> std::same_as<T>;
};

// F(x, y) at scalar type T.
template <class T, class M>
T finsler(const M& m, const Vec<T>& x, const Vec<T>& y) {
  return m.F(std::span<const T>(x), std::span<const T>(y));
}

// F^2(x, y) at scalar type T; metrics may supply F2 directly.
template <class T, class M>
T energy(const M& m, const Vec<T>& x, const Vec<T>& y) {
  if constexpr (HasEnergy<M, T>) {
    return m.F2(std::span<const T>(x), std::span<const T>(y));
  } else {
    const T f = finsler(m, x, y);
    return f * f;
  }
}

// Gaussian elimination with partial pivoting on the primal value.
// a is row-major n x n; b holds `cols` right-hand sides, row-major n x cols.
template <class T>
Vec<T> solve(Vec<T> a, Vec<T> b, std::size_t n, std::size_t cols = 1) {
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(primal(a[r * n + c])) > std::abs(primal(a[piv * n + c]))) piv = r;
    if (piv != c) {
      for (std::size_t k = 0; k < n; ++k) std::swap(a[c * n + k], a[piv * n + k]);
      for (std::size_t k = 0; k < cols; ++k) std::swap(b[c * cols + k], b[piv * cols + k]);
    }
    const T inv = T(1.0) / a[c * n + c];
    for (std::size_t r = c + 1; r < n; ++r) {
      const T f = a[r * n + c] * inv;
      for (std::size_t k = c; k < n; ++k) a[r * n + k] = a[r * n + k] - f * a[c * n + k];
      for (std::size_t k = 0; k < cols; ++k) b[r * cols + k] = b[r * cols + k] - f * b[c * cols + k];
    }
  }
  for (std::size_t cc = n; cc-- > 0;) {
    for (std::size_t k = 0; k < cols; ++k) {
      T s = b[cc * cols + k];
      for (std::size_t j = cc + 1; j < n; ++j) s = s - a[cc * n + j] * b[j * cols + k];
      b[cc * cols + k] = s / a[cc * n + cc];
    }
  }
  return b;
}

template <class T>
Vec<T> inverse(const Vec<T>& a, std::size_t n) {
  Vec<T> id(n * n, T(0.0));
  for (std::size_t i = 0; i < n; ++i) id[i * n + i] = T(1.0);
  return solve(a, id, n, n);
}

template <class T>
Dual<Dual<T>> lift2(const T& value, bool inner, bool outer) {
  const T one(1.0);
  const T zero(0.0);
  return Dual<Dual<T>>(Dual<T>(value, inner ? one : zero), Dual<T>(outer ? one : zero, zero));
}

template <class T>
Dual<T> lift1(const T& value, bool active) {
  return Dual<T>(value, active ? T(1.0) : T(0.0));
}

// Derivatives of F^2 up to second order at (x, y).
template <class T>
struct EnergyDerivatives {
  Vec<T> dx;   // dF^2/dx^k
  Vec<T> hyy;  // d2F^2/dy^i dy^j, row-major
  Vec<T> hxy;  // d2F^2/dx^k dy^l, row k
};

template <class T, class M>
Vec<T> energy_hessian_yy(const M& m, const Vec<T>& x, const Vec<T>& y) {
  using U = Dual<Dual<T>>;
  const std::size_t n = y.size();
  Vec<U> xu(n);
  for (std::size_t i = 0; i < n; ++i) xu[i] = lift2(x[i], false, false);
  Vec<T> h(n * n, T(0.0));
  Vec<U> yu(n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a; b < n; ++b) {
      for (std::size_t i = 0; i < n; ++i) yu[i] = lift2(y[i], i == b, i == a);
      const U r = energy(m, xu, yu);
      h[a * n + b] = r.d.d;
      h[b * n + a] = r.d.d;
    }
  }
  return h;
}

template <class T, class M>
EnergyDerivatives<T> energy_derivatives(const M& m, const Vec<T>& x, const Vec<T>& y) {
  using U = Dual<Dual<T>>;
  const std::size_t n = y.size();
  EnergyDerivatives<T> out;
  out.hyy = energy_hessian_yy(m, x, y);
  out.hxy.assign(n * n, T(0.0));
  out.dx.assign(n, T(0.0));
  Vec<U> xu(n);
  Vec<U> yu(n);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) xu[i] = lift2(x[i], false, i == k);
    for (std::size_t l = 0; l < n; ++l) {
      for (std::size_t i = 0; i < n; ++i) yu[i] = lift2(y[i], i == l, false);
      const U r = energy(m, xu, yu);
      out.hxy[k * n + l] = r.d.d;
      out.dx[k] = r.d.v;
    }
  }
  return out;
}

// g_ij = 1/2 d2F^2/dy^i dy^j
template <class T, class M>
Vec<T> fundamental_tensor(const M& m, const Vec<T>& x, const Vec<T>& y) {
  Vec<T> h = energy_hessian_yy(m, x, y);
  for (auto& e : h) e = e * 0.5;
  return h;
}

// Spray coefficients G^i = 1/4 g^{il} (d2F^2/dx^k dy^l y^k - dF^2/dx^l).
// Equivalently 2 G^i = Gamma^i_kl(x, y) y^k y^l with the formal Christoffel
// symbols of g(x, y) at fixed y.
template <class T, class M>
Vec<T> spray(const M& m, const Vec<T>& x, const Vec<T>& y) {
  const std::size_t n = y.size();
  const EnergyDerivatives<T> d = energy_derivatives(m, x, y);
  Vec<T> rhs(n, T(0.0));
  for (std::size_t l = 0; l < n; ++l) {
    T s = T(0.0) - d.dx[l];
    for (std::size_t k = 0; k < n; ++k) s = s + d.hxy[k * n + l] * y[k];
    rhs[l] = s * 0.5;
  }
  // hyy = 2 g
  return solve(d.hyy, rhs, n);
}

// N^i_j = dG^i/dy^j, row-major (i, j).
template <class T, class M>
Vec<T> nonlinear_connection(const M& m, const Vec<T>& x, const Vec<T>& y) {
  const std::size_t n = y.size();
  Vec<Dual<T>> xd(n);
  Vec<Dual<T>> yd(n);
  for (std::size_t i = 0; i < n; ++i) xd[i] = lift1(x[i], false);
  Vec<T> out(n * n, T(0.0));
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) yd[i] = lift1(y[i], i == j);
    const Vec<Dual<T>> g = spray(m, xd, yd);
    for (std::size_t i = 0; i < n; ++i) out[i * n + j] = g[i].d;
  }
  return out;
}

// Directional derivative of a kernel K(x, y) -> Vec<T> in coordinate `dir`
// of x (wrt_y = false) or of y (wrt_y = true).
template <class Kernel>
Vec<double> partial(Kernel&& kernel, const Vec<double>& x, const Vec<double>& y, std::size_t dir, bool wrt_y) {
  const std::size_t n = x.size();
  Vec<Dual<double>> xd(n);
  Vec<Dual<double>> yd(n);
  for (std::size_t i = 0; i < n; ++i) {
    xd[i] = lift1(x[i], !wrt_y && i == dir);
    yd[i] = lift1(y[i], wrt_y && i == dir);
  }
  const Vec<Dual<double>> r = kernel(xd, yd);
  Vec<double> out(r.size());
  for (std::size_t q = 0; q < r.size(); ++q) out[q] = r[q].d;
  return out;
}

// Value, gradient and Hessian of a scalar function of z, where f is generic
// over the scalar type (called with Dual<Dual<double>>).
template <class Fn>
double value_gradient_hessian(Fn&& f, const Vec<double>& z, Vec<double>& grad, Vec<double>& hess) {
  using U = Dual<Dual<double>>;
  const std::size_t m = z.size();
  grad.assign(m, 0.0);
  hess.assign(m * m, 0.0);
  double value = 0.0;
  Vec<U> zu(m);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a; b < m; ++b) {
      for (std::size_t i = 0; i < m; ++i) zu[i] = lift2(z[i], i == b, i == a);
      const U r = f(zu);
      hess[a * m + b] = r.d.d;
      hess[b * m + a] = r.d.d;
      grad[a] = r.d.v;
      grad[b] = r.v.d;
      value = r.v.v;
    }
  }
  return value;
}

// Value and gradient of a scalar function generic over the scalar type.
template <class Fn>
double value_gradient(Fn&& f, const Vec<double>& z, Vec<double>& grad) {
  const std::size_t m = z.size();
  grad.assign(m, 0.0);
  double value = 0.0;
  Vec<Dual<double>> zd(m);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t i = 0; i < m; ++i) zd[i] = lift1(z[i], i == a);
    const Dual<double> r = f(zd);
    grad[a] = r.d;
    value = r.v;
  }
  return value;
}

}  // namespace fpe::detail
