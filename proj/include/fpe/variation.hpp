#pragma once

// First and second variation of E_p: first-variation formula with corner
// jumps, the index form, its matrix over a hat-function basis and the
// classification of critical points.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "fpe/jacobi.hpp"

namespace fpe {

struct JumpTerm {
  double t = 0.0;
  Tangent delta;  // right minus left limit of F^{p-2} c'
};

/// Dual vector of the first variation: (1/p) dE_p = -sum_t g(X, delta_t)
/// - int g(X, gradient) dt.
struct FirstVariationResult {
  double p = 0.0;
  VectorFieldAlongCurve gradient_field;  // F^{p-4} [F^2 nabla c' + (p-2) g(nabla c', c') c']
  std::vector<JumpTerm> jump_terms;
  double total_norm = 0.0;
};

template <DifferentiableMetric M>
FirstVariationResult first_variation_field(const M& m, const DiscretizedCurve& c, double p) {
  if (p == 0.0 || !std::isfinite(p)) throw InvalidInput("p must be a nonzero real");
  const auto acc = geodesic_residual(m, c);
  FirstVariationResult out;
  out.p = p;
  std::vector<Tangent> left_w;
  for (std::size_t q = 0; q < c.segments().size(); ++q) {
    const auto& s = c.segments()[q];
    const auto v = segment_velocities(c, s);
    std::vector<Tangent> seg(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
      const Point& x = c.node(s.first + k);
      const Matrix g = fundamental_tensor(m, x, v[k]);
      const double f2 = v[k].dot(g * v[k]);
      const double f = std::sqrt(f2);
      const Tangent& a = acc.segments[q][k];
      seg[k] = std::pow(f, p - 4.0) * (f2 * a + (p - 2.0) * a.dot(g * v[k]) * v[k]);
      out.total_norm = std::max(out.total_norm, std::sqrt(seg[k].dot(g * seg[k])));
    }
    if (q > 0) {
      const Point& x = c.node(s.first);
      const double fr = finsler_norm(m, x, v.front());
      JumpTerm j{c.param(s.first), std::pow(fr, p - 2.0) * v.front() - left_w.back()};
      out.total_norm = std::max(out.total_norm, j.delta.norm());
      out.jump_terms.push_back(std::move(j));
    }
    const double fl = finsler_norm(m, c.node(s.last), v.back());
    left_w.push_back(std::pow(fl, p - 2.0) * v.back());
    out.gradient_field.segments.push_back(std::move(seg));
  }
  return out;
}

/// (1/p) dE_p(c + sX)/ds at s = 0 for a variation field vanishing at the
/// endpoints. Each corner contributes g(X, F^{p-2} c') from either side,
/// with the fundamental tensor taken at that side's velocity.
template <DifferentiableMetric M>
double first_variation(const M& m, const DiscretizedCurve& c, double p, const VectorFieldAlongCurve& X) {
  detail::check_field(c, X);
  if (!X.vanishes_at_ends(1e-12)) throw InvalidInput("variation field must vanish at the endpoints");
  const FirstVariationResult fv = first_variation_field(m, c, p);
  const double h = c.spacing();
  double total = 0.0;
  for (std::size_t q = 0; q < c.segments().size(); ++q) {
    const auto& s = c.segments()[q];
    const auto v = segment_velocities(c, s);
    const auto w = detail::simpson_weights(s.size(), h);
    for (std::size_t k = 0; k < s.size(); ++k) {
      const Matrix g = fundamental_tensor(m, c.node(s.first + k), v[k]);
      total -= w[k] * X.segments[q][k].dot(g * fv.gradient_field.segments[q][k]);
    }
    auto side_term = [&](std::size_t k) {
      const Point& x = c.node(s.first + k);
      const Matrix g = fundamental_tensor(m, x, v[k]);
      const double f = std::sqrt(v[k].dot(g * v[k]));
      return std::pow(f, p - 2.0) * X.segments[q][k].dot(g * v[k]);
    };
    if (q > 0) total -= side_term(0);
    if (q + 1 < c.segments().size()) total += side_term(s.size() - 1);
  }
  return total;
}

/// Integrand of the index form at one node, before the p v^{p-4} factor.
template <DifferentiableMetric M>
double index_integrand(const M& m, const Point& x, const Tangent& v, double speed, double p, const Tangent& X,
                       const Tangent& dX, const Tangent& Y, const Tangent& dY) {
  const Matrix g = fundamental_tensor(m, x, v);
  const double r2 = X.dot(g * R2_operator(m, x, v, Y));
  return speed * speed * (dX.dot(g * dY) - r2) + (p - 2.0) * v.dot(g * dX) * v.dot(g * dY);
}

/// I_p(X, Y) = p v^{p-4} int { v^2 [g(X', Y') - R2(X, c', Y, c')] + (p-2) g(c', X') g(c', Y') } dt
/// along a geodesic of constant speed v, where ' is the covariant derivative.
template <DifferentiableMetric M>
double index_form(const M& m, const DiscretizedCurve& c, double p, const VectorFieldAlongCurve& X,
                  const VectorFieldAlongCurve& Y) {
  if (p == 0.0 || !std::isfinite(p)) throw InvalidInput("p must be a nonzero real");
  require_geodesic(m, c);
  detail::check_field(c, X);
  detail::check_field(c, Y);
  if (!X.vanishes_at_ends(1e-12) || !Y.vanishes_at_ends(1e-12))
    throw InvalidInput("variation fields must vanish at the endpoints");
  const double v = mean_speed(m, c);
  const auto dX = covariant_derivative(m, c, X);
  const auto dY = covariant_derivative(m, c, Y);
  const auto& s = c.segments().front();
  const auto vel = segment_velocities(c, s);
  const auto w = detail::simpson_weights(s.size(), c.spacing());
  double integral = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k)
    integral += w[k] * index_integrand(m, c.node(k), vel[k], v, p, X.segments[0][k], dX.segments[0][k],
                                       Y.segments[0][k], dY.segments[0][k]);
  return p * std::pow(v, p - 4.0) * integral;
}

/// Matrix of I_p over the fields phi_k E_a, where phi_k is the hat function
/// of interior node k and E_a the parallel orthonormal frame (E_0 = c'/v).
/// Index of (a, k) is a (N-1) + (k-1): tangential block first.
struct IndexFormMatrix {
  double p = 0.0;
  double v = 0.0;
  std::size_t dim = 0;
  std::size_t interior = 0;
  Matrix matrix;
  std::vector<std::size_t> tangential;
  std::vector<std::size_t> orthogonal;

  Matrix block(const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) const {
    Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < cols.size(); ++j)
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            matrix(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(cols[j]));
    return out;
  }
  Matrix tangential_block() const { return block(tangential, tangential); }
  Matrix orthogonal_block() const { return block(orthogonal, orthogonal); }
  double cross_block_max() const { return block(tangential, orthogonal).cwiseAbs().maxCoeff(); }
  double max_diagonal() const { return matrix.diagonal().cwiseAbs().maxCoeff(); }
  double asymmetry() const { return (matrix - matrix.transpose()).cwiseAbs().maxCoeff(); }

  /// Coefficient vector of the field sum_k xi_a(t_k) phi_k E_a.
  Eigen::VectorXd coefficients(const std::vector<Eigen::VectorXd>& xi_nodes) const {
    Eigen::VectorXd u(static_cast<Eigen::Index>(dim * interior));
    for (std::size_t a = 0; a < dim; ++a)
      for (std::size_t k = 1; k <= interior; ++k)
        u[static_cast<Eigen::Index>(a * interior + k - 1)] = xi_nodes[k][static_cast<Eigen::Index>(a)];
    return u;
  }
};

/// Assembles the index matrix. Derivative terms are integrated exactly on
/// the hat basis; the curvature term uses the frame curvature interpolated
/// linearly on each grid interval.
template <DifferentiableMetric M>
IndexFormMatrix assemble_index_matrix(const M& m, const DiscretizedCurve& c, double p) {
  if (p == 0.0 || !std::isfinite(p)) throw InvalidInput("p must be a nonzero real");
  const ParallelFrame fr = parallel_frame(m, c);
  const std::size_t N = c.intervals();
  const std::size_t n = c.dim();
  const std::size_t I = N - 1;
  const double h = c.spacing();
  const double v = fr.speed;

  IndexFormMatrix out;
  out.p = p;
  out.v = v;
  out.dim = n;
  out.interior = I;
  out.matrix = Matrix::Zero(static_cast<Eigen::Index>(n * I), static_cast<Eigen::Index>(n * I));
  for (std::size_t k = 0; k < I; ++k) out.tangential.push_back(k);
  for (std::size_t k = I; k < n * I; ++k) out.orthogonal.push_back(k);

  auto idx = [&](std::size_t a, std::size_t node) { return static_cast<Eigen::Index>(a * I + node - 1); };
  auto add = [&](std::size_t a, std::size_t k, std::size_t b, std::size_t l, double val) {
    if (k == 0 || k == N || l == 0 || l == N) return;
    out.matrix(idx(a, k), idx(b, l)) += val;
  };
  const double v2 = v * v;
  for (std::size_t e = 0; e < N; ++e) {
    const std::size_t k0 = e, k1 = e + 1;
    const Matrix& K0 = fr.curvature[k0];
    const Matrix& K1 = fr.curvature[k1];
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) {
        const auto ai = static_cast<Eigen::Index>(a), bi = static_cast<Eigen::Index>(b);
        double stiff = (a == b) ? v2 : 0.0;
        if (a == 0 && b == 0) stiff += (p - 2.0) * v2;
        // int phi_i phi_j (K0 (1-s) + K1 s) over the element
        const double m00 = h * (K0(ai, bi) / 4.0 + K1(ai, bi) / 12.0);
        const double m01 = h * (K0(ai, bi) + K1(ai, bi)) / 12.0;
        const double m11 = h * (K0(ai, bi) / 12.0 + K1(ai, bi) / 4.0);
        add(a, k0, b, k0, stiff / h - v2 * m00);
        add(a, k1, b, k1, stiff / h - v2 * m11);
        add(a, k0, b, k1, -stiff / h - v2 * m01);
        add(a, k1, b, k0, -stiff / h - v2 * m01);
      }
  }
  out.matrix *= p * std::pow(v, p - 4.0);
  return out;
}

enum class PRegime { negative, between_zero_and_one, above_one };

inline PRegime regime_of(double p) {
  if (p < 0.0) return PRegime::negative;
  if (p > 0.0 && p < 1.0) return PRegime::between_zero_and_one;
  if (p > 1.0) return PRegime::above_one;
  throw BadRegime("p must not be 0 or 1");
}

inline std::string to_string(PRegime r) {
  switch (r) {
    case PRegime::negative: return "(-inf,0)";
    case PRegime::between_zero_and_one: return "(0,1)";
    case PRegime::above_one: return "(1,inf)";
  }
  return "";
}

enum class Verdict { not_max, not_min, neither_min_nor_max, inconclusive };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::not_max: return "not-max";
    case Verdict::not_min: return "not-min";
    case Verdict::neither_min_nor_max: return "neither-min-nor-max";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "";
}

struct Signature {
  std::size_t positive = 0;
  std::size_t negative = 0;
  std::size_t zero = 0;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
};

struct CriticalPointClassification {
  double p = 0.0;
  PRegime p_regime = PRegime::above_one;
  bool has_conjugate_points = false;
  Signature tangential_signature;
  Signature orthogonal_signature;
  Verdict verdict = Verdict::inconclusive;
  Verdict expected = Verdict::inconclusive;  // table value from regime and conjugacy alone
  std::string note;
};

inline Signature signature_of(const Matrix& block, double zero_band) {
  Signature s;
  if (block.size() == 0) return s;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (block + block.transpose()), Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double scale = ev.cwiseAbs().maxCoeff();
  s.min_eigenvalue = ev.minCoeff();
  s.max_eigenvalue = ev.maxCoeff();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (std::abs(ev[i]) <= zero_band * scale)
      ++s.zero;
    else if (ev[i] > 0.0)
      ++s.positive;
    else
      ++s.negative;
  }
  return s;
}

inline Verdict verdict_table(PRegime r, bool conjugate) {
  if (!conjugate) return r == PRegime::above_one ? Verdict::not_max : Verdict::neither_min_nor_max;
  switch (r) {
    case PRegime::negative: return Verdict::not_max;
    case PRegime::between_zero_and_one: return Verdict::not_min;
    case PRegime::above_one: return Verdict::neither_min_nor_max;
  }
  return Verdict::inconclusive;
}

/// Table verdict from the p-regime and interior conjugate points, issued only
/// when both block signatures carry the expected signs: the tangential block
/// is definite with the sign of p(p-1); the orthogonal block is definite with
/// the sign of p without conjugate points and has an eigenvalue of the
/// opposite sign with them. Any eigenvalue within the zero band, or a
/// conjugate point at the endpoint, makes the verdict inconclusive.
inline CriticalPointClassification classify_critical_point(const IndexFormMatrix& mat, const ConjugateReport& conj,
                                                           double zero_band = 1e-7) {
  CriticalPointClassification out;
  out.p = mat.p;
  out.p_regime = regime_of(mat.p);
  out.has_conjugate_points = conj.m() > 0;
  out.tangential_signature = signature_of(mat.tangential_block(), zero_band);
  out.orthogonal_signature = signature_of(mat.orthogonal_block(), zero_band);
  out.expected = verdict_table(out.p_regime, out.has_conjugate_points);

  const auto& ts = out.tangential_signature;
  const auto& os = out.orthogonal_signature;
  const bool tangential_positive = out.p_regime != PRegime::between_zero_and_one;
  const bool tangential_ok = tangential_positive ? (ts.negative == 0 && ts.positive > 0) : (ts.positive == 0 && ts.negative > 0);
  const bool p_positive = mat.p > 0.0;
  bool orthogonal_ok = false;
  if (mat.dim < 2) {
    orthogonal_ok = true;
  } else if (!out.has_conjugate_points) {
    orthogonal_ok = p_positive ? os.negative == 0 : os.positive == 0;
  } else {
    orthogonal_ok = p_positive ? os.negative > 0 : os.positive > 0;
  }

  if (conj.endpoint_conjugate) {
    out.note = "endpoint is conjugate to the start; the index form is degenerate";
  } else if (ts.zero > 0 || os.zero > 0) {
    out.note = "eigenvalues inside the zero band";
  } else if (!tangential_ok || !orthogonal_ok) {
    out.note = "block signatures disagree with the conjugate-point report";
  } else {
    out.verdict = out.expected;
    return out;
  }
  out.verdict = Verdict::inconclusive;
  return out;
}

}  // namespace fpe
