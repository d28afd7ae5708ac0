#pragma once

// Great circles on the round 2-sphere chart and the wraparound survey:
// geodesics between two fixed points that wind k extra times around.

#include <cmath>
#include <numbers>
#include <vector>

#include "fpe/jacobi.hpp"
#include "fpe/metrics.hpp"

namespace fpe {

namespace detail {

inline Eigen::Vector3d embed(const Point& x) {
  return {std::sin(x[0]) * std::cos(x[1]), std::sin(x[0]) * std::sin(x[1]), std::cos(x[0])};
}

}  // namespace detail

/// Great circle from x0 through x1 on a 2-sphere chart, continued for
/// `extra_turns` additional full windings, sampled at N + 1 nodes with
/// constant speed. The azimuth is unwrapped so the chart curve is continuous.
inline DiscretizedCurve great_circle(const Sphere& s, const Point& x0, const Point& x1, int extra_turns,
                                     std::size_t intervals) {
  if (s.dim() != 2) throw InvalidInput("great circles are provided on the 2-sphere");
  if (!s.in_domain(x0) || !s.in_domain(x1)) throw ChartDomain();
  if (extra_turns < 0) throw InvalidInput("extra_turns must be non-negative");
  const Eigen::Vector3d u = detail::embed(x0);
  const Eigen::Vector3d e1 = detail::embed(x1);
  const double angle = std::acos(std::clamp(u.dot(e1), -1.0, 1.0));
  if (angle < 1e-9 || std::numbers::pi - angle < 1e-9) throw InvalidInput("endpoints must not coincide or be antipodal");
  const Eigen::Vector3d w = (e1 - std::cos(angle) * u).normalized();
  const double total = angle + 2.0 * std::numbers::pi * extra_turns;
  double last_phi = x0[1];
  std::vector<Point> nodes;
  for (std::size_t k = 0; k <= intervals; ++k) {
    const double a = total * static_cast<double>(k) / static_cast<double>(intervals);
    const Eigen::Vector3d q = std::cos(a) * u + std::sin(a) * w;
    Point x(2);
    x[0] = std::acos(std::clamp(q.z(), -1.0, 1.0));
    double phi = std::atan2(q.y(), q.x());
    phi += 2.0 * std::numbers::pi * std::round((last_phi - phi) / (2.0 * std::numbers::pi));
    x[1] = phi;
    last_phi = phi;
    if (!s.in_domain(x)) throw ChartDomain("great circle passes through the pole collar");
    nodes.push_back(x);
  }
  nodes.front() = x0;
  if (extra_turns == 0) nodes.back() = x1;
  return DiscretizedCurve(std::move(nodes));
}

/// Equator arc of the given sphere length starting at azimuth 0.
inline DiscretizedCurve equator_arc(const Sphere& s, double arc_length, std::size_t intervals) {
  if (s.dim() != 2) throw InvalidInput("equator arcs are provided on the 2-sphere");
  const double span = arc_length / s.radius();
  return DiscretizedCurve::sample(
      [&](double t) {
        Point x(2);
        x << std::numbers::pi / 2.0, span * t;
        return x;
      },
      intervals);
}

struct SurveyRow {
  int wraps = 0;
  double length = 0.0;
  std::size_t conjugate_count = 0;
  std::vector<double> conjugate_params;
  bool endpoint_conjugate = false;
  std::vector<std::pair<double, double>> energies;  // (p, E_p)
};

struct SurveyTable {
  std::vector<SurveyRow> rows;

  bool conjugate_count_increasing() const {
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (rows[i].conjugate_count <= rows[i - 1].conjugate_count) return false;
    return true;
  }
  /// E_p strictly increasing in the winding number for p > 0, strictly
  /// decreasing for p < 0.
  bool energy_monotone(double p) const {
    auto value = [&](const SurveyRow& r) {
      for (const auto& [q, e] : r.energies)
        if (q == p) return e;
      throw InvalidInput("p not in survey");
    };
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const double a = value(rows[i - 1]), b = value(rows[i]);
      if (p > 0.0 ? !(b > a) : !(b < a)) return false;
    }
    return true;
  }
};

/// For k = 0..wraps: the great circle x0 -> x1 with k extra windings, its
/// length, interior conjugate count and E_p for each p. The grid grows with
/// the length so the node spacing in arc length stays fixed.
inline SurveyTable sphere_wraparound_survey(const Sphere& s, const Point& x0, const Point& x1, int wraps,
                                            const std::vector<double>& p_list, std::size_t base_intervals = 200) {
  if (wraps < 0) throw InvalidInput("wraps must be non-negative");
  SurveyTable table;
  for (int k = 0; k <= wraps; ++k) {
    const std::size_t N = base_intervals * static_cast<std::size_t>(k + 1);
    const DiscretizedCurve c = great_circle(s, x0, x1, k, N);
    const ConjugateReport rep = find_conjugate_points(s, c);
    SurveyRow row;
    row.wraps = k;
    row.length = length(s, c);
    row.conjugate_count = rep.m();
    row.conjugate_params = rep.params();
    row.endpoint_conjugate = rep.endpoint_conjugate;
    for (double p : p_list) row.energies.emplace_back(p, p_energy(s, c, p).value);
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace fpe
