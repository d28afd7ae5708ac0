#pragma once

// Piecewise-smooth curves on a uniform grid over [0, 1] and the p-energy
// E_p(c) = int_0^1 F(c, c')^p dt.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "fpe/metric.hpp"
#include "fpe/types.hpp"

namespace fpe {

/// Inclusive node-index range of one smooth piece.
struct Segment {
  std::size_t first = 0;
  std::size_t last = 0;
  std::size_t size() const { return last - first + 1; }
};

enum class Side { left, right };

/// Nodes c(t_k) at t_k = k / N. Junction (corner) nodes are stored once and
/// split the curve into segments; each segment has at least 5 nodes and an
/// even number of intervals.
class DiscretizedCurve {
 public:
  explicit DiscretizedCurve(std::vector<Point> nodes, std::vector<std::size_t> junctions = {})
      : nodes_(std::move(nodes)), junctions_(std::move(junctions)) {
    if (nodes_.size() < 5) throw GridTooCoarse("a curve needs at least 5 nodes");
    const auto n = nodes_.front().size();
    if (n < 1) throw InvalidInput("empty point");
    for (const auto& p : nodes_) {
      if (p.size() != n) throw InvalidInput("inconsistent node dimensions");
      if (!p.allFinite()) throw InvalidInput("non-finite node");
    }
    std::sort(junctions_.begin(), junctions_.end());
    junctions_.erase(std::unique(junctions_.begin(), junctions_.end()), junctions_.end());
    std::size_t first = 0;
    for (std::size_t j : junctions_) {
      if (j == 0 || j >= nodes_.size() - 1) throw InvalidInput("junction must be an interior node");
      segments_.push_back({first, j});
      first = j;
    }
    segments_.push_back({first, nodes_.size() - 1});
    for (const auto& s : segments_) {
      if (s.size() < 5) throw GridTooCoarse("every segment needs at least 5 nodes");
      if ((s.size() - 1) % 2 != 0) throw InvalidInput("every segment needs an even number of intervals");
    }
  }

  /// Samples f at N + 1 uniform parameters.
  static DiscretizedCurve sample(const std::function<Point(double)>& f, std::size_t intervals,
                                 std::vector<std::size_t> junctions = {}) {
    std::vector<Point> nodes;
    nodes.reserve(intervals + 1);
    for (std::size_t k = 0; k <= intervals; ++k) nodes.push_back(f(static_cast<double>(k) / static_cast<double>(intervals)));
    return DiscretizedCurve(std::move(nodes), std::move(junctions));
  }

  std::size_t dim() const { return static_cast<std::size_t>(nodes_.front().size()); }
  std::size_t intervals() const { return nodes_.size() - 1; }
  std::size_t node_count() const { return nodes_.size(); }
  double spacing() const { return 1.0 / static_cast<double>(intervals()); }
  double param(std::size_t k) const { return static_cast<double>(k) * spacing(); }
  const Point& node(std::size_t k) const { return nodes_[k]; }
  const std::vector<Point>& nodes() const { return nodes_; }
  const Point& start() const { return nodes_.front(); }
  const Point& end() const { return nodes_.back(); }
  const std::vector<std::size_t>& junctions() const { return junctions_; }
  const std::vector<Segment>& segments() const { return segments_; }

 private:
  std::vector<Point> nodes_;
  std::vector<std::size_t> junctions_;
  std::vector<Segment> segments_;
};

/// Vector field sampled at curve nodes, stored per segment so that one-sided
/// values at junctions (e.g. of a covariant derivative) are both kept.
struct VectorFieldAlongCurve {
  std::vector<std::vector<Tangent>> segments;

  static VectorFieldAlongCurve from_nodes(const DiscretizedCurve& c, const std::vector<Tangent>& values) {
    if (values.size() != c.node_count()) throw InvalidInput("field sample count must match node count");
    VectorFieldAlongCurve f;
    for (const auto& s : c.segments()) f.segments.emplace_back(values.begin() + static_cast<std::ptrdiff_t>(s.first),
                                                               values.begin() + static_cast<std::ptrdiff_t>(s.last) + 1);
    return f;
  }

  static VectorFieldAlongCurve sample(const DiscretizedCurve& c, const std::function<Tangent(double)>& f) {
    std::vector<Tangent> values;
    values.reserve(c.node_count());
    for (std::size_t k = 0; k < c.node_count(); ++k) values.push_back(f(c.param(k)));
    return from_nodes(c, values);
  }

  /// One value per node; at junctions the value from the given side.
  std::vector<Tangent> nodes(Side junction_side = Side::right) const {
    std::vector<Tangent> out;
    for (std::size_t s = 0; s < segments.size(); ++s) {
      const auto& seg = segments[s];
      const std::size_t skip_front = (s > 0 && junction_side == Side::left) ? 1 : 0;
      for (std::size_t q = skip_front; q < seg.size(); ++q) {
        if (q + 1 == seg.size() && s + 1 < segments.size() && junction_side == Side::right) continue;
        out.push_back(seg[q]);
      }
    }
    return out;
  }

  double max_norm() const {
    double m = 0.0;
    for (const auto& seg : segments)
      for (const auto& v : seg) m = std::max(m, v.norm());
    return m;
  }

  bool vanishes_at_ends(double tol = 1e-12) const {
    return segments.front().front().norm() <= tol && segments.back().back().norm() <= tol;
  }
};

namespace detail {

template <class V>
std::vector<V> gather(const DiscretizedCurve& c, const Segment& s) {
  return std::vector<V>(c.nodes().begin() + static_cast<std::ptrdiff_t>(s.first),
                        c.nodes().begin() + static_cast<std::ptrdiff_t>(s.last) + 1);
}

// Fourth-order first derivative on a uniform grid: 5-point central stencil
// inside, 5-point one-sided stencils on the two nodes nearest each end.
template <class V>
std::vector<V> derivative4(const std::vector<V>& f, double h) {
  const std::size_t m = f.size();
  if (m < 5) throw GridTooCoarse("derivative stencil needs at least 5 nodes");
  std::vector<V> d(m);
  const double s = 1.0 / (12.0 * h);
  d[0] = s * (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]);
  d[1] = s * (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]);
  for (std::size_t k = 2; k + 2 < m; ++k) d[k] = s * (f[k - 2] - 8.0 * f[k - 1] + 8.0 * f[k + 1] - f[k + 2]);
  const std::size_t e = m - 1;
  d[e] = s * (25.0 * f[e] - 48.0 * f[e - 1] + 36.0 * f[e - 2] - 16.0 * f[e - 3] + 3.0 * f[e - 4]);
  d[e - 1] = s * (3.0 * f[e] + 10.0 * f[e - 1] - 18.0 * f[e - 2] + 6.0 * f[e - 3] - f[e - 4]);
  return d;
}

// Second-order first derivative: central inside, 3-point one-sided at ends.
template <class V>
std::vector<V> derivative2(const std::vector<V>& f, double h) {
  const std::size_t m = f.size();
  if (m < 3) throw GridTooCoarse("derivative stencil needs at least 3 nodes");
  std::vector<V> d(m);
  d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
  for (std::size_t k = 1; k + 1 < m; ++k) d[k] = (f[k + 1] - f[k - 1]) / (2.0 * h);
  d[m - 1] = (3.0 * f[m - 1] - 4.0 * f[m - 2] + f[m - 3]) / (2.0 * h);
  return d;
}

// Second-order second derivative: central inside, 4-point one-sided at ends.
template <class V>
std::vector<V> second_derivative2(const std::vector<V>& f, double h) {
  const std::size_t m = f.size();
  if (m < 4) throw GridTooCoarse("second-derivative stencil needs at least 4 nodes");
  std::vector<V> d(m);
  const double s = 1.0 / (h * h);
  d[0] = s * (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]);
  for (std::size_t k = 1; k + 1 < m; ++k) d[k] = s * (f[k + 1] - 2.0 * f[k] + f[k - 1]);
  const std::size_t e = m - 1;
  d[e] = s * (2.0 * f[e] - 5.0 * f[e - 1] + 4.0 * f[e - 2] - f[e - 3]);
  return d;
}

// Composite Simpson weights (times h) for an even number of intervals.
inline std::vector<double> simpson_weights(std::size_t nodes, double h) {
  std::vector<double> w(nodes, 0.0);
  for (std::size_t k = 0; k + 1 < nodes; k += 2) {
    w[k] += h / 3.0;
    w[k + 1] += 4.0 * h / 3.0;
    w[k + 2] += h / 3.0;
  }
  return w;
}

}  // namespace detail

/// Velocities c'(t_k) on one segment (fourth-order differences, one-sided at
/// the segment ends, so both one-sided velocities exist at a junction).
inline std::vector<Tangent> segment_velocities(const DiscretizedCurve& c, const Segment& s) {
  return detail::derivative4(detail::gather<Tangent>(c, s), c.spacing());
}

inline std::vector<std::vector<Tangent>> velocities(const DiscretizedCurve& c) {
  std::vector<std::vector<Tangent>> out;
  for (const auto& s : c.segments()) out.push_back(segment_velocities(c, s));
  return out;
}

/// c'(t_k). At a junction `side` selects the left or right limit.
inline Tangent velocity(const DiscretizedCurve& c, std::size_t k, Side side = Side::right) {
  if (k >= c.node_count()) throw InvalidInput("node index out of range");
  const auto& segs = c.segments();
  for (std::size_t q = 0; q < segs.size(); ++q) {
    const auto& s = segs[q];
    const bool last_seg = q + 1 == segs.size();
    if (k < s.first || k > s.last) continue;
    if (k == s.last && !last_seg && side == Side::right) continue;
    return segment_velocities(c, s)[k - s.first];
  }
  throw InvalidInput("node index out of range");
}

/// Throws ZeroVelocity unless every node velocity has norm >= kMinSpeed.
inline void check_regular(const DiscretizedCurve& c) {
  for (const auto& seg : velocities(c))
    for (const auto& v : seg)
      if (!(v.norm() >= kMinSpeed)) throw ZeroVelocity("curve is not regular");
}

template <FinslerMetric M>
void check_in_domain(const M& m, const DiscretizedCurve& c) {
  if (c.dim() != m.dim()) throw InvalidInput("curve dimension does not match metric");
  for (const auto& p : c.nodes())
    if (!m.in_domain(p)) throw ChartDomain("curve leaves the chart domain");
}

/// Node speeds F(c(t_k), c'(t_k)) per segment.
template <FinslerMetric M>
std::vector<std::vector<double>> node_speeds(const M& m, const DiscretizedCurve& c) {
  check_in_domain(m, c);
  std::vector<std::vector<double>> out;
  const auto vel = velocities(c);
  for (std::size_t q = 0; q < vel.size(); ++q) {
    const auto& s = c.segments()[q];
    std::vector<double> sp(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
      if (!(vel[q][k].norm() >= kMinSpeed)) throw ZeroVelocity("curve is not regular");
      sp[k] = finsler_norm(m, c.node(s.first + k), vel[q][k]);
    }
    out.push_back(std::move(sp));
  }
  return out;
}

/// (max - min) / mean of node speeds.
template <FinslerMetric M>
double speed_spread(const M& m, const DiscretizedCurve& c) {
  double lo = 1e300, hi = 0.0, sum = 0.0;
  std::size_t cnt = 0;
  for (const auto& seg : node_speeds(m, c))
    for (double v : seg) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      sum += v;
      ++cnt;
    }
  return (hi - lo) / (sum / static_cast<double>(cnt));
}

template <FinslerMetric M>
double mean_speed(const M& m, const DiscretizedCurve& c) {
  double sum = 0.0;
  std::size_t cnt = 0;
  for (const auto& seg : node_speeds(m, c))
    for (double v : seg) {
      sum += v;
      ++cnt;
    }
  return sum / static_cast<double>(cnt);
}

struct PEnergyValue {
  double p = 0.0;
  double value = 0.0;
  double quadrature_error_estimate = 0.0;
};

/// Composite Simpson quadrature of F(c, c')^p per segment; the error estimate
/// is the distance to the trapezoid value.
template <FinslerMetric M>
PEnergyValue p_energy(const M& m, const DiscretizedCurve& c, double p) {
  if (p == 0.0 || !std::isfinite(p)) throw InvalidInput("p must be a nonzero real");
  const double h = c.spacing();
  double simpson = 0.0;
  double trapezoid = 0.0;
  for (const auto& seg : node_speeds(m, c)) {
    const auto w = detail::simpson_weights(seg.size(), h);
    for (std::size_t k = 0; k < seg.size(); ++k) {
      const double f = std::pow(seg[k], p);
      simpson += w[k] * f;
      trapezoid += ((k == 0 || k + 1 == seg.size()) ? 0.5 : 1.0) * h * f;
    }
  }
  return {p, simpson, std::abs(simpson - trapezoid)};
}

template <FinslerMetric M>
double length(const M& m, const DiscretizedCurve& c) {
  return p_energy(m, c, 1.0).value;
}

/// E_p(c) - L(c)^p. Nonnegative for p > 1 and p < 0, nonpositive for
/// 0 < p < 1 (Hoelder/Jensen).
template <FinslerMetric M>
double hoelder_gap(const M& m, const DiscretizedCurve& c, double p) {
  return p_energy(m, c, p).value - std::pow(length(m, c), p);
}

/// Expected sign of hoelder_gap for exponent p.
inline int hoelder_sign(double p) { return (p > 0.0 && p < 1.0) ? -1 : (p == 1.0 ? 0 : 1); }

namespace detail {

inline constexpr std::array<double, 5> kGaussNodes = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                                      0.5384693101056831, 0.9061798459386640};
inline constexpr std::array<double, 5> kGaussWeights = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                                        0.4786286704993665, 0.2369268850561891};

// Cubic Hermite piece on one interval, local parameter s in [0, 1].
struct HermitePiece {
  Point p0, p1;
  Tangent m0, m1;  // derivatives wrt s (= h * c')

  Point eval(double s) const {
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * p0 + (s3 - 2 * s2 + s) * m0 + (-2 * s3 + 3 * s2) * p1 + (s3 - s2) * m1;
  }
  Tangent deriv(double s) const {
    const double s2 = s * s;
    return (6 * s2 - 6 * s) * p0 + (3 * s2 - 4 * s + 1) * m0 + (-6 * s2 + 6 * s) * p1 + (3 * s2 - 2 * s) * m1;
  }
};

template <FinslerMetric M>
double hermite_arc(const M& m, const HermitePiece& piece, double a, double b) {
  double sum = 0.0;
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (std::size_t q = 0; q < kGaussNodes.size(); ++q) {
    const double s = mid + half * kGaussNodes[q];
    sum += kGaussWeights[q] * finsler_norm(m, piece.eval(s), piece.deriv(s));
  }
  return sum * half;
}

}  // namespace detail

/// Same image, re-sampled at equal arc-length spacing (single-segment curves).
/// Positions come from cubic Hermite interpolation with fourth-order node
/// velocities; arc length from 5-point Gauss quadrature on each piece.
template <FinslerMetric M>
DiscretizedCurve reparametrize_constant_speed(const M& m, const DiscretizedCurve& c) {
  if (c.segments().size() != 1) throw InvalidInput("reparametrization needs a single-segment curve");
  check_in_domain(m, c);
  check_regular(c);
  const double h = c.spacing();
  const auto vel = segment_velocities(c, c.segments().front());
  const std::size_t N = c.intervals();
  std::vector<detail::HermitePiece> pieces(N);
  std::vector<double> cumulative(N + 1, 0.0);
  for (std::size_t k = 0; k < N; ++k) {
    pieces[k] = {c.node(k), c.node(k + 1), h * vel[k], h * vel[k + 1]};
    cumulative[k + 1] = cumulative[k] + detail::hermite_arc(m, pieces[k], 0.0, 1.0);
  }
  const double total = cumulative[N];
  std::vector<Point> nodes(N + 1);
  nodes.front() = c.start();
  nodes.back() = c.end();
  std::size_t piece = 0;
  for (std::size_t j = 1; j < N; ++j) {
    const double target = total * static_cast<double>(j) / static_cast<double>(N);
    while (piece + 1 < N && cumulative[piece + 1] < target) ++piece;
    const double want = target - cumulative[piece];
    double lo = 0.0, hi = 1.0, s = 0.5;
    for (int it = 0; it < 100 && hi - lo > 1e-15; ++it) {
      s = 0.5 * (lo + hi);
      if (detail::hermite_arc(m, pieces[piece], 0.0, s) < want)
        lo = s;
      else
        hi = s;
    }
    nodes[j] = pieces[piece].eval(0.5 * (lo + hi));
  }
  return DiscretizedCurve(std::move(nodes));
}

}  // namespace fpe
