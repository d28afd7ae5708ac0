#pragma once

// Built-in metrics: Euclidean, round sphere in a polar chart, Randers, and a
// type-erased metric backed by a plain double-precision evaluator.

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>

#include "fpe/metric.hpp"

namespace fpe {

class Euclidean {
 public:
  explicit Euclidean(std::size_t n = 2) : n_(n) {
    if (n < 2) throw InvalidInput("dimension must be at least 2");
  }

  std::size_t dim() const { return n_; }
  std::string name() const { return "euclidean"; }
  bool riemannian() const { return true; }
  std::optional<double> constant_curvature() const { return 0.0; }

  template <class T>
  T F2(std::span<const T> /*x*/, std::span<const T> y) const {
    T s(0.0);
    for (const auto& c : y) s = s + c * c;
    return s;
  }
  template <class T>
  T F(std::span<const T> x, std::span<const T> y) const {
    using std::sqrt;
    return sqrt(F2(x, y));
  }

  Matrix analytic_tensor(const Point& /*x*/, const Tangent& /*y*/) const {
    return Matrix::Identity(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
  }

  bool in_domain(const Point& x) const { return x.allFinite(); }

  Point sample_point(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Point x(static_cast<Eigen::Index>(n_));
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = u(rng);
    return x;
  }

 private:
  std::size_t n_;
};

/// Round sphere S^n of radius R in hyperspherical coordinates
/// (x^1..x^{n-1} polar angles, x^n azimuth):
///   F^2 = R^2 (y1^2 + sin^2 x1 y2^2 + sin^2 x1 sin^2 x2 y3^2 + ...).
/// The azimuth is an unbounded real so curves may wind around repeatedly.
/// Polar angles are kept a collar away from the poles.
class Sphere {
 public:
  explicit Sphere(double radius = 1.0, std::size_t n = 2, double pole_margin = 1e-3)
      : radius_(radius), n_(n), pole_margin_(pole_margin) {
    if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidInput("sphere radius must be positive");
    if (n < 2) throw InvalidInput("dimension must be at least 2");
  }

  std::size_t dim() const { return n_; }
  double radius() const { return radius_; }
  double pole_margin() const { return pole_margin_; }
  std::string name() const { return "sphere"; }
  bool riemannian() const { return true; }
  std::optional<double> constant_curvature() const { return 1.0 / (radius_ * radius_); }

  template <class T>
  T F2(std::span<const T> x, std::span<const T> y) const {
    using std::sin;
    T scale(radius_ * radius_);
    T s = scale * y[0] * y[0];
    for (std::size_t i = 1; i < n_; ++i) {
      const T sn = sin(x[i - 1]);
      scale = scale * sn * sn;
      s = s + scale * y[i] * y[i];
    }
    return s;
  }
  template <class T>
  T F(std::span<const T> x, std::span<const T> y) const {
    using std::sqrt;
    return sqrt(F2(x, y));
  }

  Matrix analytic_tensor(const Point& x, const Tangent& /*y*/) const {
    const auto n = static_cast<Eigen::Index>(n_);
    Matrix g = Matrix::Zero(n, n);
    double scale = radius_ * radius_;
    g(0, 0) = scale;
    for (Eigen::Index i = 1; i < n; ++i) {
      const double s = std::sin(x[i - 1]);
      scale *= s * s;
      g(i, i) = scale;
    }
    return g;
  }

  bool in_domain(const Point& x) const {
    if (!x.allFinite()) return false;
    for (Eigen::Index i = 0; i + 1 < x.size(); ++i)
      if (x[i] < pole_margin_ || x[i] > std::numbers::pi - pole_margin_) return false;
    return true;
  }

  Point sample_point(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> polar(pole_margin_, std::numbers::pi - pole_margin_);
    std::uniform_real_distribution<double> azimuth(0.0, 2.0 * std::numbers::pi);
    Point x(static_cast<Eigen::Index>(n_));
    for (Eigen::Index i = 0; i + 1 < x.size(); ++i) x[i] = polar(rng);
    x[x.size() - 1] = azimuth(rng);
    return x;
  }

 private:
  double radius_;
  std::size_t n_;
  double pole_margin_;
};

/// Randers metric F = sqrt(a_ij y^i y^j) + b_i(x) y^i with constant SPD a and
/// b(x) = b0 + W x. With W = 0 this is the constant-coefficient Randers
/// metric; a nonzero W (on a bounded box) gives a curved non-Riemannian case.
class Randers {
 public:
  static constexpr double kMaxBNorm = 0.95;

  Randers(Matrix a, Tangent b, Matrix w = {}, double box = std::numeric_limits<double>::infinity())
      : Randers(std::move(a), std::move(b), std::move(w), box, true) {}

  /// Skips the |b|_a bound; for axiom-validation experiments only.
  static Randers unchecked(Matrix a, Tangent b, Matrix w = {},
                           double box = std::numeric_limits<double>::infinity()) {
    return Randers(std::move(a), std::move(b), std::move(w), box, false);
  }

  std::size_t dim() const { return static_cast<std::size_t>(a_.rows()); }
  std::string name() const { return "randers"; }
  bool riemannian() const { return false; }
  const Matrix& a() const { return a_; }
  const Tangent& b() const { return b_; }
  const Matrix& w() const { return w_; }
  double box() const { return box_; }

  /// Upper bound of |b(x)|_a over the chart domain.
  double b_norm_bound() const {
    double bound = covector_norm(b_);
    if (has_field_) {
      for (Eigen::Index j = 0; j < w_.cols(); ++j) bound += box_ * covector_norm(w_.col(j));
    }
    return bound;
  }

  template <class T>
  T F(std::span<const T> x, std::span<const T> y) const {
    using std::sqrt;
    const auto n = static_cast<Eigen::Index>(dim());
    T alpha2(0.0);
    T beta(0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
      T bi(b_[i]);
      if (has_field_)
        for (Eigen::Index j = 0; j < n; ++j) bi = bi + w_(i, j) * x[static_cast<std::size_t>(j)];
      beta = beta + bi * y[static_cast<std::size_t>(i)];
      for (Eigen::Index j = 0; j < n; ++j)
        alpha2 = alpha2 + a_(i, j) * y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(j)];
    }
    return sqrt(alpha2) + beta;
  }

  bool in_domain(const Point& x) const {
    if (!x.allFinite()) return false;
    if (has_field_)
      for (Eigen::Index i = 0; i < x.size(); ++i)
        if (std::abs(x[i]) > box_) return false;
    return true;
  }

  Point sample_point(std::mt19937_64& rng) const {
    const double half = std::min(box_, 1.0);
    std::uniform_real_distribution<double> u(-half, half);
    Point x(a_.rows());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = u(rng);
    return x;
  }

 private:
  Randers(Matrix a, Tangent b, Matrix w, double box, bool checked)
      : a_(std::move(a)), b_(std::move(b)), w_(std::move(w)), box_(box) {
    const auto n = a_.rows();
    if (n < 2 || a_.cols() != n || b_.size() != n) throw InvalidInput("randers: inconsistent dimensions");
    if ((a_ - a_.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw InvalidInput("randers: a must be symmetric");
    if (!(definiteness_ratio(a_) > kDefinitenessTolerance)) throw InvalidInput("randers: a must be positive definite");
    if (w_.size() == 0) w_ = Matrix::Zero(n, n);
    if (w_.rows() != n || w_.cols() != n) throw InvalidInput("randers: W must be n x n");
    has_field_ = w_.cwiseAbs().maxCoeff() > 0.0;
    if (has_field_ && !std::isfinite(box_)) throw InvalidInput("randers: a varying b needs a bounded box");
    a_inv_ = a_.inverse();
    if (checked && b_norm_bound() > kMaxBNorm)
      throw InvalidInput("randers: |b|_a must not exceed 0.95 on the chart domain");
  }

  double covector_norm(const Tangent& c) const { return std::sqrt(c.dot(a_inv_ * c)); }

  Matrix a_;
  Tangent b_;
  Matrix w_;
  double box_;
  bool has_field_ = false;
  Matrix a_inv_;
};

/// Metric defined by an arbitrary double-precision evaluator. Its tensor
/// comes from the finite-difference engine (or an analytic evaluator when
/// given); connection quantities are unavailable.
class FunctionMetric {
 public:
  using Evaluator = std::function<double(std::span<const double>, std::span<const double>)>;
  using Domain = std::function<bool(const Point&)>;
  using Sampler = std::function<Point(std::mt19937_64&)>;
  using TensorEvaluator = std::function<Matrix(const Point&, const Tangent&)>;

  FunctionMetric(std::size_t n, Evaluator f, Domain domain, Sampler sampler, TensorEvaluator tensor = {})
      : n_(n), f_(std::move(f)), domain_(std::move(domain)), sampler_(std::move(sampler)), tensor_(std::move(tensor)) {}

  std::size_t dim() const { return n_; }
  std::string name() const { return "function"; }
  double F(std::span<const double> x, std::span<const double> y) const { return f_(x, y); }
  bool in_domain(const Point& x) const { return x.allFinite() && (!domain_ || domain_(x)); }
  Point sample_point(std::mt19937_64& rng) const { return sampler_(rng); }
  bool has_analytic_tensor() const { return static_cast<bool>(tensor_); }
  const TensorEvaluator& tensor_evaluator() const { return tensor_; }

 private:
  std::size_t n_;
  Evaluator f_;
  Domain domain_;
  Sampler sampler_;
  TensorEvaluator tensor_;
};

}  // namespace fpe
