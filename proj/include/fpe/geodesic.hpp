#pragma once

// Geodesic residual, RK4 shooting and a Newton solver for the boundary-value
// problem on the discretized p-energy.

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/LU>

#include "fpe/connection.hpp"
#include "fpe/curve.hpp"

namespace fpe {

namespace detail {

// Fourth-order second derivative: 5-point central inside, 6-point one-sided
// on the two nodes nearest each end.
template <class V>
std::vector<V> second_derivative4(const std::vector<V>& f, double h) {
  const std::size_t m = f.size();
  if (m < 6) return second_derivative2(f, h);
  std::vector<V> d(m);
  const double s = 1.0 / (12.0 * h * h);
  d[0] = s * (45.0 * f[0] - 154.0 * f[1] + 214.0 * f[2] - 156.0 * f[3] + 61.0 * f[4] - 10.0 * f[5]);
  d[1] = s * (10.0 * f[0] - 15.0 * f[1] - 4.0 * f[2] + 14.0 * f[3] - 6.0 * f[4] + f[5]);
  for (std::size_t k = 2; k + 2 < m; ++k)
    d[k] = s * (-f[k - 2] + 16.0 * f[k - 1] - 30.0 * f[k] + 16.0 * f[k + 1] - f[k + 2]);
  const std::size_t e = m - 1;
  d[e] = s * (45.0 * f[e] - 154.0 * f[e - 1] + 214.0 * f[e - 2] - 156.0 * f[e - 3] + 61.0 * f[e - 4] - 10.0 * f[e - 5]);
  d[e - 1] = s * (10.0 * f[e] - 15.0 * f[e - 1] - 4.0 * f[e - 2] + 14.0 * f[e - 3] - 6.0 * f[e - 4] + f[e - 5]);
  return d;
}

}  // namespace detail

/// nabla c' / dt = c'' + 2 G(c, c') at every node, with c' and c'' from
/// fourth-order differences. On X = c' this coincides with
/// covariant_derivative since the Cartan term C(c', .) vanishes.
template <DifferentiableMetric M>
VectorFieldAlongCurve geodesic_residual(const M& m, const DiscretizedCurve& c) {
  check_in_domain(m, c);
  check_regular(c);
  VectorFieldAlongCurve out;
  for (const auto& s : c.segments()) {
    const auto x = detail::gather<Tangent>(c, s);
    const auto v = detail::derivative4(x, c.spacing());
    const auto a = detail::second_derivative4(x, c.spacing());
    std::vector<Tangent> seg(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) seg[k] = a[k] + 2.0 * spray(m, x[k], v[k]);
    out.segments.push_back(std::move(seg));
  }
  return out;
}

/// max_k |nabla c'/dt|_g / F(c')^2 over interior nodes.
template <DifferentiableMetric M>
double geodesic_defect(const M& m, const DiscretizedCurve& c) {
  const auto res = geodesic_residual(m, c);
  double worst = 0.0;
  for (std::size_t q = 0; q < c.segments().size(); ++q) {
    const auto& s = c.segments()[q];
    const auto v = segment_velocities(c, s);
    for (std::size_t k = 1; k + 1 < s.size(); ++k) {
      const Point& x = c.node(s.first + k);
      const Matrix g = fundamental_tensor(m, x, v[k]);
      const double f2 = v[k].dot(g * v[k]);
      const Tangent& r = res.segments[q][k];
      worst = std::max(worst, std::sqrt(std::max(0.0, r.dot(g * r))) / f2);
    }
  }
  return worst;
}

inline constexpr double kGeodesicTolerance = 1e-3;

/// Throws NotAGeodesic unless c is a single smooth segment with
/// geodesic_defect <= tol.
template <DifferentiableMetric M>
void require_geodesic(const M& m, const DiscretizedCurve& c, double tol = kGeodesicTolerance) {
  if (c.segments().size() != 1) throw NotAGeodesic("a geodesic has no corners");
  const double d = geodesic_defect(m, c);
  if (!(d <= tol)) throw NotAGeodesic("geodesic residual " + std::to_string(d) + " exceeds tolerance");
}

struct ShotGeodesic {
  DiscretizedCurve curve;
  std::vector<Tangent> velocities;  // d/dt on [0, t_end]
  double speed_drift = 0.0;         // (max F - min F) / F(x0, y0)
};

/// Integrates c'' = -2 G(c, c') from (x0, y0) over [0, t_end] with `steps`
/// RK4 steps. The returned curve is reparametrized to [0, 1].
template <DifferentiableMetric M>
ShotGeodesic shoot_geodesic_states(const M& m, const Point& x0, const Tangent& y0, double t_end, std::size_t steps) {
  detail::check_point(m, x0);
  detail::check_tangent(m, y0);
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw InvalidInput("t_end must be positive");
  if (steps < 4 || steps % 2 != 0) throw InvalidInput("steps must be even and at least 4");
  const double dt = t_end / static_cast<double>(steps);
  const auto n = x0.size();
  auto rhs = [&](const Eigen::VectorXd& z) {
    const Point x = z.head(n);
    const Tangent y = z.tail(n);
    if (!m.in_domain(x)) throw ChartDomain("geodesic left the chart domain");
    Eigen::VectorXd out(2 * n);
    out.head(n) = y;
    out.tail(n) = -2.0 * spray(m, x, y);
    return out;
  };
  Eigen::VectorXd z(2 * n);
  z << x0, y0;
  std::vector<Point> nodes{x0};
  std::vector<Tangent> vel{y0};
  const double f0 = finsler_norm(m, x0, y0);
  double lo = f0, hi = f0;
  for (std::size_t s = 0; s < steps; ++s) {
    const Eigen::VectorXd k1 = rhs(z);
    const Eigen::VectorXd k2 = rhs(z + 0.5 * dt * k1);
    const Eigen::VectorXd k3 = rhs(z + 0.5 * dt * k2);
    const Eigen::VectorXd k4 = rhs(z + dt * k3);
    z += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const Point x = z.head(n);
    const Tangent y = z.tail(n);
    if (!m.in_domain(x)) throw ChartDomain("geodesic left the chart domain");
    if (y.norm() < kMinSpeed) throw ZeroVelocity();
    const double f = finsler_norm(m, x, y);
    lo = std::min(lo, f);
    hi = std::max(hi, f);
    nodes.push_back(x);
    vel.push_back(y);
  }
  return {DiscretizedCurve(std::move(nodes)), std::move(vel), (hi - lo) / f0};
}

template <DifferentiableMetric M>
DiscretizedCurve shoot_geodesic(const M& m, const Point& x0, const Tangent& y0, double t_end, std::size_t steps) {
  return shoot_geodesic_states(m, x0, y0, t_end, steps).curve;
}

/// Straight chart segment from x0 to x1 with N intervals.
inline DiscretizedCurve linear_curve(const Point& x0, const Point& x1, std::size_t intervals) {
  return DiscretizedCurve::sample([&](double t) -> Point { return (1.0 - t) * x0 + t * x1; }, intervals);
}

namespace detail {

// h * F(midpoint, difference quotient)^p for one grid interval; z = (x_k, x_{k+1}).
template <class M>
struct ElementEnergy {
  const M& m;
  double p;
  double h;

  template <class T>
  T operator()(const Vec<T>& z) const {
    using std::pow;
    const std::size_t n = z.size() / 2;
    Vec<T> mid(n), vel(n);
    for (std::size_t i = 0; i < n; ++i) {
      mid[i] = (z[i] + z[n + i]) * 0.5;
      vel[i] = (z[n + i] - z[i]) / h;
    }
    return pow(energy(m, mid, vel), 0.5 * p) * h;
  }
};

}  // namespace detail

/// Midpoint-rule discretization of E_p over grid intervals with its exact
/// gradient and block-tridiagonal Hessian in the interior node coordinates.
struct DiscreteEnergy {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Matrix hessian;
};

template <DifferentiableMetric M>
DiscreteEnergy discrete_energy(const M& m, const std::vector<Point>& nodes, double p, bool with_hessian = true) {
  const std::size_t N = nodes.size() - 1;
  const std::size_t n = static_cast<std::size_t>(nodes.front().size());
  const double h = 1.0 / static_cast<double>(N);
  const auto dim = static_cast<Eigen::Index>((N - 1) * n);
  DiscreteEnergy out;
  out.gradient = Eigen::VectorXd::Zero(dim);
  if (with_hessian) out.hessian = Matrix::Zero(dim, dim);
  const detail::ElementEnergy<M> element{m, p, h};
  std::vector<double> z(2 * n), grad, hess;
  for (std::size_t k = 0; k < N; ++k) {
    if (!m.in_domain(nodes[k]) || !m.in_domain(nodes[k + 1])) throw ChartDomain();
    if ((nodes[k + 1] - nodes[k]).norm() / h < kMinSpeed) throw ZeroVelocity();
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = nodes[k][static_cast<Eigen::Index>(i)];
      z[n + i] = nodes[k + 1][static_cast<Eigen::Index>(i)];
    }
    out.value += with_hessian ? detail::value_gradient_hessian(element, z, grad, hess)
                              : detail::value_gradient(element, z, grad);
    // global interior index of local slot a (node k or k+1)
    auto global = [&](std::size_t a) -> Eigen::Index {
      const std::size_t node = k + a / n;
      if (node == 0 || node == N) return -1;
      return static_cast<Eigen::Index>((node - 1) * n + a % n);
    };
    for (std::size_t a = 0; a < 2 * n; ++a) {
      const Eigen::Index ga = global(a);
      if (ga < 0) continue;
      out.gradient[ga] += grad[a];
      if (!with_hessian) continue;
      for (std::size_t b = 0; b < 2 * n; ++b) {
        const Eigen::Index gb = global(b);
        if (gb >= 0) out.hessian(ga, gb) += hess[a * 2 * n + b];
      }
    }
  }
  return out;
}

struct BvpOptions {
  double tol = 1e-8;  // on max |gradient| / h
  int max_iterations = 60;
};

struct BvpResult {
  DiscretizedCurve curve;
  int iterations = 0;
  double gradient_norm = 0.0;
  double energy = 0.0;
};

class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, BvpResult best) : Error(what), best_(std::move(best)) {}
  const BvpResult& best() const { return best_; }

 private:
  BvpResult best_;
};

namespace detail {

template <DifferentiableMetric M>
BvpResult newton_bvp(const M& m, double p, const DiscretizedCurve& init, const BvpOptions& opt) {
  const std::size_t N = init.intervals();
  const std::size_t n = init.dim();
  const double h = init.spacing();

  std::vector<Point> nodes = init.nodes();
  auto apply = [&](const std::vector<Point>& base, const Eigen::VectorXd& step, double alpha) {
    std::vector<Point> out = base;
    for (std::size_t k = 1; k < N; ++k)
      out[k] += alpha * step.segment(static_cast<Eigen::Index>((k - 1) * n), static_cast<Eigen::Index>(n));
    return out;
  };

  DiscreteEnergy cur = discrete_energy(m, nodes, p);
  double gnorm = cur.gradient.cwiseAbs().maxCoeff() / h;
  int it = 0;
  for (; it < opt.max_iterations && gnorm > opt.tol; ++it) {
    const Eigen::VectorXd step = Eigen::PartialPivLU<Matrix>(cur.hessian).solve(-cur.gradient);
    const double merit = cur.gradient.squaredNorm();
    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls, alpha *= 0.5) {
      try {
        auto trial = apply(nodes, step, alpha);
        DiscreteEnergy next = discrete_energy(m, trial, p);
        if (next.gradient.allFinite() && next.gradient.squaredNorm() < (1.0 - 1e-4 * alpha) * merit) {
          nodes = std::move(trial);
          cur = std::move(next);
          accepted = true;
          break;
        }
      } catch (const ChartDomain&) {
      } catch (const ZeroVelocity&) {
      }
    }
    gnorm = cur.gradient.cwiseAbs().maxCoeff() / h;
    if (!accepted) break;
  }
  return {DiscretizedCurve(nodes), it, gnorm, cur.value};
}

}  // namespace detail

/// Newton iteration on the discrete E_p with a backtracking line search on
/// the squared gradient norm, so saddle-type critical points (p < 1, long
/// sphere arcs) are found as readily as minima. Converged when
/// max |dE/dx_k| / h <= tol. If the iteration stalls for p != 2, it is
/// restarted from the E_2 critical point, which is a geodesic as well.
template <DifferentiableMetric M>
BvpResult solve_geodesic_bvp(const M& m, const Point& x0, const Point& x1, double p, const DiscretizedCurve& init,
                             const BvpOptions& opt = {}) {
  if (p == 0.0 || p == 1.0 || !std::isfinite(p)) throw InvalidInput("p must not be 0 or 1");
  if (init.segments().size() != 1) throw InvalidInput("initial curve must be a single segment");
  if ((init.start() - x0).norm() > 1e-12 || (init.end() - x1).norm() > 1e-12)
    throw InvalidInput("initial curve endpoints do not match");
  check_in_domain(m, init);
  check_regular(init);

  BvpResult result = detail::newton_bvp(m, p, init, opt);
  if (!(result.gradient_norm <= opt.tol) && p != 2.0) {
    const BvpResult warm = detail::newton_bvp(m, 2.0, init, opt);
    if (warm.gradient_norm <= opt.tol) {
      BvpResult retry = detail::newton_bvp(m, p, warm.curve, opt);
      retry.iterations += result.iterations + warm.iterations;
      if (retry.gradient_norm < result.gradient_norm) result = std::move(retry);
    }
  }
  if (!(result.gradient_norm <= opt.tol))
    throw NoConvergence("geodesic solver stopped at gradient norm " + std::to_string(result.gradient_norm),
                        std::move(result));
  return result;
}

}  // namespace fpe
