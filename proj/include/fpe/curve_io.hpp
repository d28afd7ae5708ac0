#pragma once

// Curve exchange formats.
//
// CSV: header "t,x1,...,xn", one node per row. A junction node is written
// twice (closing one segment and opening the next), so segments survive a
// round trip.
// JSON: {"params": [t_0..t_N], "segments": [[[x..]..]..]} with junction nodes
// repeated at the end and start of adjacent segments.

#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpe/curve.hpp"

namespace fpe {

inline void write_csv(std::ostream& os, const DiscretizedCurve& c) {
  os << "t";
  for (std::size_t i = 1; i <= c.dim(); ++i) os << ",x" << i;
  os << "\n" << std::setprecision(17);
  for (const auto& s : c.segments()) {
    for (std::size_t k = s.first; k <= s.last; ++k) {
      if (k == s.first && k != 0) continue;
      os << c.param(k);
      for (Eigen::Index i = 0; i < c.node(k).size(); ++i) os << "," << c.node(k)[i];
      os << "\n";
      if (k == s.last && k != c.intervals()) {
        os << c.param(k);
        for (Eigen::Index i = 0; i < c.node(k).size(); ++i) os << "," << c.node(k)[i];
        os << "\n";
      }
    }
  }
}

inline DiscretizedCurve read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InvalidInput("empty curve file");
  std::vector<double> params;
  std::vector<Point> nodes;
  std::vector<std::size_t> junctions;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) {
      try {
        vals.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw InvalidInput("bad number in curve file: " + cell);
      }
    }
    if (vals.size() < 3) throw InvalidInput("curve rows need t and at least two coordinates");
    Point x = to_eigen(std::vector<double>(vals.begin() + 1, vals.end()));
    if (!params.empty() && vals[0] == params.back()) {
      if ((x - nodes.back()).norm() > 1e-12) throw InvalidInput("repeated parameter with a different node");
      junctions.push_back(nodes.size() - 1);
      continue;
    }
    params.push_back(vals[0]);
    nodes.push_back(std::move(x));
  }
  if (nodes.size() < 2) throw InvalidInput("curve file has too few nodes");
  const double N = static_cast<double>(nodes.size() - 1);
  for (std::size_t k = 0; k < params.size(); ++k)
    if (std::abs(params[k] - static_cast<double>(k) / N) > 1e-9) throw InvalidInput("curve parameters must be uniform on [0, 1]");
  return DiscretizedCurve(std::move(nodes), std::move(junctions));
}

inline nlohmann::json to_json(const DiscretizedCurve& c) {
  nlohmann::json j;
  j["params"] = nlohmann::json::array();
  for (std::size_t k = 0; k < c.node_count(); ++k) j["params"].push_back(c.param(k));
  j["segments"] = nlohmann::json::array();
  for (const auto& s : c.segments()) {
    nlohmann::json seg = nlohmann::json::array();
    for (std::size_t k = s.first; k <= s.last; ++k) seg.push_back(to_std(c.node(k)));
    j["segments"].push_back(std::move(seg));
  }
  return j;
}

inline DiscretizedCurve curve_from_json(const nlohmann::json& j) {
  if (!j.contains("segments") || !j["segments"].is_array() || j["segments"].empty())
    throw InvalidInput("curve JSON needs a non-empty \"segments\" array");
  std::vector<Point> nodes;
  std::vector<std::size_t> junctions;
  for (std::size_t q = 0; q < j["segments"].size(); ++q) {
    const auto& seg = j["segments"][q];
    for (std::size_t k = 0; k < seg.size(); ++k) {
      if (q > 0 && k == 0) {
        junctions.push_back(nodes.size() - 1);
        continue;
      }
      nodes.push_back(to_eigen(seg[k].get<std::vector<double>>()));
    }
  }
  return DiscretizedCurve(std::move(nodes), std::move(junctions));
}

}  // namespace fpe
