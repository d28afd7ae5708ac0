#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fpe {

using Point = Eigen::VectorXd;    // chart coordinates x
using Tangent = Eigen::VectorXd;  // components y of a vector in T_xM
using Matrix = Eigen::MatrixXd;

// Minimum admissible speed; F is not differentiable at y = 0.
inline constexpr double kMinSpeed = 1e-8;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class ZeroVelocity : public Error {
 public:
  ZeroVelocity() : Error("velocity below the minimum-speed floor") {}
  using Error::Error;
};
class ChartDomain : public Error {
 public:
  ChartDomain() : Error("point outside the chart domain") {}
  using Error::Error;
};
class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};
class GridTooCoarse : public Error {
 public:
  using Error::Error;
};
class NotAGeodesic : public Error {
 public:
  using Error::Error;
};
class BadRegime : public Error {
 public:
  using Error::Error;
};
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Dense n x n x n array indexed (i, j, k); used for Christoffel-type
// coefficients A^i_jk.
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(std::size_t n) : n_(n), data_(n * n * n, 0.0) {}

  std::size_t dim() const { return n_; }
  double& operator()(std::size_t i, std::size_t j, std::size_t k) { return data_[(i * n_ + j) * n_ + k]; }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const { return data_[(i * n_ + j) * n_ + k]; }

  // A^i_jk u^j w^k
  Tangent contract(const Tangent& u, const Tangent& w) const {
    Tangent out = Tangent::Zero(static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j)
        for (std::size_t k = 0; k < n_; ++k) out[i] += (*this)(i, j, k) * u[j] * w[k];
    return out;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  // max |A^i_jk - A^i_kj|
  double lower_asymmetry() const {
    double m = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j)
        for (std::size_t k = 0; k < n_; ++k) m = std::max(m, std::abs((*this)(i, j, k) - (*this)(i, k, j)));
    return m;
  }

  friend Tensor3 operator-(const Tensor3& a, const Tensor3& b) {
    Tensor3 out(a.n_);
    for (std::size_t q = 0; q < a.data_.size(); ++q) out.data_[q] = a.data_[q] - b.data_[q];
    return out;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

inline std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace fpe
