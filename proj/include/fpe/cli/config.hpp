#pragma once

// Experiment configuration: a flat "key = value" text file with dotted keys.
// Lines starting with '#' are comments. Lists are comma separated.

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "fpe/metrics.hpp"

namespace fpe::cli {

class ConfigError : public Error {
 public:
  using Error::Error;
};

class Config {
 public:
  Config() = default;

  static Config parse(std::istream& is) {
    Config c;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
      const std::string key = trim(line.substr(0, eq));
      if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
      c.values_[key] = trim(line.substr(eq + 1));
    }
    return c;
  }

  static Config parse_string(const std::string& text) {
    std::istringstream is(text);
    return parse(is);
  }

  static Config load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file " + path);
    return parse(f);
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string str(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }
  std::string str(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing key " + key);
    return it->second;
  }

  double real(const std::string& key, double fallback) const { return has(key) ? real(key) : fallback; }
  double real(const std::string& key) const { return to_real(key, str(key)); }

  long long integer(const std::string& key, long long fallback) const { return has(key) ? integer(key) : fallback; }
  long long integer(const std::string& key) const {
    const std::string s = str(key);
    try {
      std::size_t used = 0;
      const long long v = std::stoll(s, &used);
      if (used != s.size()) throw ConfigError("");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("key " + key + ": expected an integer, got '" + s + "'");
    }
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string s = str(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError("key " + key + ": expected a boolean, got '" + s + "'");
  }

  std::vector<double> reals(const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(str(key));
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(to_real(key, trim(cell)));
    if (out.empty()) throw ConfigError("key " + key + ": empty list");
    return out;
  }
  std::vector<double> reals(const std::string& key, std::vector<double> fallback) const {
    return has(key) ? reals(key) : fallback;
  }

 private:
  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
  }
  static double to_real(const std::string& key, const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw ConfigError("");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("key " + key + ": expected a number, got '" + s + "'");
    }
  }

  std::map<std::string, std::string> values_;
};

using AnyMetric = std::variant<Euclidean, Sphere, Randers>;

inline Matrix square_from(const std::vector<double>& v, const std::string& key) {
  const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
  if (n * n != static_cast<Eigen::Index>(v.size())) throw ConfigError(key + ": expected n*n entries");
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = v[static_cast<std::size_t>(i * n + j)];
  return m;
}

/// Builds the metric named by metric.name. `checked = false` skips the
/// Randers |b| bound so that validation can report axiom failures.
inline AnyMetric make_metric(const Config& c, bool checked = true) {
  const std::string name = c.str("metric.name");
  const auto dim = static_cast<std::size_t>(c.integer("metric.dim", 2));
  try {
    if (name == "euclidean") return Euclidean(dim);
    if (name == "sphere") return Sphere(c.real("metric.radius", 1.0), dim, c.real("metric.pole_margin", 1e-3));
    if (name == "randers") {
      const Matrix a = c.has("metric.a") ? square_from(c.reals("metric.a"), "metric.a")
                                         : Matrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
      const Tangent b = to_eigen(c.reals("metric.b"));
      const Matrix w = c.has("metric.w") ? square_from(c.reals("metric.w"), "metric.w") : Matrix();
      const double box = c.real("metric.box", std::numeric_limits<double>::infinity());
      return checked ? Randers(a, b, w, box) : Randers::unchecked(a, b, w, box);
    }
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("metric: ") + e.what());
  }
  throw ConfigError("unknown metric.name '" + name + "' (expected euclidean, sphere or randers)");
}

/// Checked experiment settings shared by all commands.
struct ExperimentConfig {
  Config raw;
  std::vector<double> p_list;
  std::size_t N = 200;
  std::uint64_t seed = 0;
  double tol_gradient = 1e-8;
  double tol_eigen = 1e-7;
  double tol_conjugate = 1e-8;
  double tol_geodesic = 1e-3;
  std::string output_path;
  std::string format = "json";

  static ExperimentConfig from(const Config& c) {
    ExperimentConfig e;
    e.raw = c;
    e.p_list = c.reals("p_list", {2.0});
    for (double p : e.p_list)
      if (p == 0.0 || !std::isfinite(p)) throw ConfigError("p_list: values must be nonzero");
    const long long N = c.integer("grid.N", 200);
    if (N < 20 || N % 2 != 0) throw ConfigError("grid.N must be even and at least 20");
    e.N = static_cast<std::size_t>(N);
    const long long seed = c.integer("seed", 0);
    if (seed < 0) throw ConfigError("seed must be non-negative");
    e.seed = static_cast<std::uint64_t>(seed);
    e.tol_gradient = c.real("tol.gradient", e.tol_gradient);
    e.tol_eigen = c.real("tol.eigen", e.tol_eigen);
    e.tol_conjugate = c.real("tol.conjugate", e.tol_conjugate);
    e.tol_geodesic = c.real("tol.geodesic", e.tol_geodesic);
    e.output_path = c.str("output.path", "");
    e.format = c.str("output.format", "json");
    if (e.format != "json" && e.format != "csv") throw ConfigError("output.format must be json or csv");
    return e;
  }
};

}  // namespace fpe::cli
