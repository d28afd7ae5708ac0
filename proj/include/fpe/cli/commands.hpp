#pragma once

// Subcommands of the fpe driver. Each returns its report and exit code;
// writing files is left to emit().

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fpe/cli/config.hpp"
#include "fpe/curve_io.hpp"
#include "fpe/survey.hpp"
#include "fpe/variation.hpp"

namespace fpe::cli {

using nlohmann::json;

enum ExitCode { kOk = 0, kConfigError = 1, kValidationFailed = 2, kGeodesicFailed = 3 };

struct CommandResult {
  int exit_code = kOk;
  json report;
  std::string csv;        // tabular form of the report
  std::string curve_csv;  // geodesic command only
  std::string summary;
};

enum class LogLevel { quiet, info, debug };

inline LogLevel log_level() {
  const char* env = std::getenv("FPE_LOG");
  if (env == nullptr) return LogLevel::quiet;
  const std::string v(env);
  if (v == "debug") return LogLevel::debug;
  if (v == "info") return LogLevel::info;
  return LogLevel::quiet;
}

inline void log(LogLevel level, const std::string& msg) {
  if (level != LogLevel::quiet && log_level() >= level)
    std::cerr << (level == LogLevel::debug ? "[debug] " : "[info] ") << msg << "\n";
}

inline json header(const std::string& command, const ExperimentConfig& e) {
  json j;
  j["schema_version"] = 1;
  j["command"] = command;
  json cfg = json::object();
  for (const auto& [k, v] : e.raw.values())
    if (k != "output.path" && k != "output.curve") cfg[k] = v;
  j["config"] = cfg;
  return j;
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

// ---------------------------------------------------------------- validate

inline CommandResult cmd_validate(const ExperimentConfig& e) {
  const AnyMetric metric = make_metric(e.raw, false);
  const auto samples = e.raw.integer("validate.samples", 1000);
  if (samples < 1) throw ConfigError("validate.samples must be positive");
  const ValidationReport rep = std::visit(
      [&](const auto& m) { return validate_metric(m, static_cast<std::size_t>(samples), e.seed); }, metric);
  CommandResult r;
  r.report = header("validate", e);
  r.report["samples"] = rep.samples;
  r.report["passed"] = rep.passed;
  r.report["checks"] = json::array();
  std::ostringstream csv;
  csv << "check,max_violation,tolerance,failures,passed\n";
  for (const auto& c : rep.checks) {
    r.report["checks"].push_back({{"name", c.name},
                                  {"max_violation", c.max_violation},
                                  {"tolerance", c.tolerance},
                                  {"failures", c.failures},
                                  {"passed", c.passed}});
    csv << c.name << "," << fmt(c.max_violation) << "," << fmt(c.tolerance) << "," << c.failures << ","
        << (c.passed ? "true" : "false") << "\n";
    if (!c.passed) r.summary += "FAILED " + c.name + " (" + std::to_string(c.failures) + " samples)\n";
  }
  r.csv = csv.str();
  r.exit_code = rep.passed ? kOk : kValidationFailed;
  if (rep.passed) r.summary = "all axiom checks passed\n";
  return r;
}

// ------------------------------------------------------------ curve source

struct CurveSource {
  DiscretizedCurve curve;
  json info;
};

inline Point point_key(const Config& c, const std::string& key, std::size_t dim) {
  const auto v = c.reals(key);
  if (v.size() != dim) throw ConfigError(key + ": expected " + std::to_string(dim) + " coordinates");
  return to_eigen(v);
}

inline double solve_exponent(const ExperimentConfig& e) {
  if (e.raw.has("curve.solve_p")) return e.raw.real("curve.solve_p");
  for (double p : e.p_list)
    if (p != 1.0) return p;
  return 2.0;
}

/// Initial curve for the boundary-value solver: the chart segment x0 -> x1,
/// optionally warped in parameter (curve.warp in [0, 1)) and bent sideways
/// (curve.bulge, along the first two coordinates).
inline DiscretizedCurve initial_curve(const Point& x0, const Point& x1, std::size_t N, double warp, double bulge) {
  if (!(warp >= 0.0 && warp < 1.0)) throw ConfigError("curve.warp must lie in [0, 1)");
  Tangent side = Tangent::Zero(x0.size());
  const Tangent d = x1 - x0;
  side[0] = -d[1];
  side[1] = d[0];
  return DiscretizedCurve::sample(
      [&](double t) -> Point {
        const double s = t + warp * std::sin(2.0 * std::numbers::pi * t) / (2.0 * std::numbers::pi);
        return x0 + s * d + bulge * std::sin(std::numbers::pi * t) * side;
      },
      N);
}

template <class M>
CurveSource build_curve(const M& m, const ExperimentConfig& e) {
  const Config& c = e.raw;
  const std::string source = c.str("curve.source", "bvp");
  const std::size_t n = m.dim();
  std::optional<DiscretizedCurve> curve;
  json info;
  info["source"] = source;
  if (source == "shoot") {
    const Point x0 = point_key(c, "curve.x0", n);
    const Tangent y0 = point_key(c, "curve.y0", n);
    const double t_end = c.real("curve.t_end", 1.0);
    const ShotGeodesic shot = shoot_geodesic_states(m, x0, y0, t_end, e.N);
    info["t_end"] = t_end;
    info["final_point"] = to_std(shot.curve.end());
    info["speed_drift"] = shot.speed_drift;
    curve = shot.curve;
  } else if (source == "bvp") {
    const Point x0 = point_key(c, "curve.x0", n);
    const Point x1 = point_key(c, "curve.x1", n);
    const double p = solve_exponent(e);
    const DiscretizedCurve init = initial_curve(x0, x1, e.N, c.real("curve.warp", 0.0), c.real("curve.bulge", 0.0));
    BvpOptions opt;
    opt.tol = e.tol_gradient;
    opt.max_iterations = static_cast<int>(c.integer("solver.max_iterations", opt.max_iterations));
    const BvpResult res = solve_geodesic_bvp(m, x0, x1, p, init, opt);
    info["solve_p"] = p;
    info["iterations"] = res.iterations;
    info["gradient_norm"] = res.gradient_norm;
    curve = res.curve;
  } else if (source == "file") {
    const std::string path = c.str("curve.file");
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open curve file " + path);
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
      curve = curve_from_json(json::parse(f));
    } else {
      curve = read_csv(f);
    }
    info["file"] = path;
  } else if (source == "great_circle") {
    if constexpr (std::is_same_v<M, Sphere>) {
      const Point x0 = point_key(c, "curve.x0", n);
      const Point x1 = point_key(c, "curve.x1", n);
      const auto wraps = static_cast<int>(c.integer("curve.wraps", 0));
      curve = great_circle(m, x0, x1, wraps, e.N);
      info["wraps"] = wraps;
    } else {
      throw ConfigError("curve.source = great_circle needs metric.name = sphere");
    }
  } else {
    throw ConfigError("unknown curve.source '" + source + "' (expected bvp, shoot, file or great_circle)");
  }
  return {*curve, info};
}

// ---------------------------------------------------------------- geodesic

inline CommandResult cmd_geodesic(const ExperimentConfig& e) {
  const AnyMetric metric = make_metric(e.raw);
  CommandResult r;
  r.report = header("geodesic", e);
  try {
    std::visit(
        [&](const auto& m) {
          const CurveSource src = build_curve(m, e);
          const DiscretizedCurve& c = src.curve;
          r.report["curve"] = src.info;
          r.report["nodes"] = c.node_count();
          r.report["length"] = length(m, c);
          r.report["geodesic_residual"] = geodesic_defect(m, c);
          r.report["speed_spread"] = speed_spread(m, c);
          r.report["start"] = to_std(c.start());
          r.report["end"] = to_std(c.end());
          json energies = json::array();
          for (double p : e.p_list) energies.push_back({{"p", p}, {"E_p", p_energy(m, c, p).value}});
          r.report["energies"] = energies;
          std::ostringstream os;
          write_csv(os, c);
          r.curve_csv = os.str();
          r.summary = "length " + fmt(length(m, c)) + "\n";
        },
        metric);
  } catch (const NoConvergence& ex) {
    r.report["error"] = ex.what();
    r.report["best_gradient_norm"] = ex.best().gradient_norm;
    std::ostringstream os;
    write_csv(os, ex.best().curve);
    r.curve_csv = os.str();
    r.exit_code = kGeodesicFailed;
    r.summary = std::string(ex.what()) + "\n";
    return r;
  }
  std::ostringstream csv;
  csv << "p,E_p\n";
  for (const auto& row : r.report["energies"]) csv << fmt(row["p"].get<double>()) << "," << fmt(row["E_p"].get<double>()) << "\n";
  r.csv = csv.str();
  return r;
}

// ---------------------------------------------------------------- classify

inline json signature_json(const Signature& s) {
  return {{"positive", s.positive},
          {"negative", s.negative},
          {"zero", s.zero},
          {"min_eigenvalue", s.min_eigenvalue},
          {"max_eigenvalue", s.max_eigenvalue}};
}

inline CommandResult cmd_classify(const ExperimentConfig& e) {
  const AnyMetric metric = make_metric(e.raw);
  CommandResult r;
  r.report = header("classify", e);
  std::ostringstream csv;
  csv << "p,regime,v,E_p,L,tangential_pos,tangential_neg,tangential_zero,orthogonal_pos,orthogonal_neg,"
         "orthogonal_zero,m,verdict\n";
  try {
    std::visit(
        [&](const auto& m) {
          const CurveSource src = build_curve(m, e);
          const DiscretizedCurve& c = src.curve;
          r.report["curve"] = src.info;
          require_geodesic(m, c, e.tol_geodesic);
          ConjugateOptions copt;
          copt.refinement_tol = e.tol_conjugate;
          const ConjugateReport conj = find_conjugate_points(m, c, copt);
          const double L = length(m, c);
          r.report["length"] = L;
          r.report["geodesic_residual"] = geodesic_defect(m, c);
          r.report["conjugate_params"] = conj.params();
          r.report["m"] = conj.m();
          r.report["endpoint_conjugate"] = conj.endpoint_conjugate;
          const auto K = constant_curvature(m);
          json results = json::array();
          for (double p : e.p_list) {
            json row;
            row["p"] = p;
            if (p == 1.0) {
              row["verdict"] = "inconclusive";
              row["note"] = "p = 1 is outside the classified regimes";
              results.push_back(row);
              continue;
            }
            const IndexFormMatrix mat = assemble_index_matrix(m, c, p);
            const CriticalPointClassification cls = classify_critical_point(mat, conj, e.tol_eigen);
            const double Ep = p_energy(m, c, p).value;
            row["v"] = mat.v;
            row["regime"] = to_string(cls.p_regime);
            row["E_p"] = Ep;
            row["L"] = L;
            row["signatures"] = {{"tangential", signature_json(cls.tangential_signature)},
                                 {"orthogonal", signature_json(cls.orthogonal_signature)}};
            row["verdict"] = to_string(cls.verdict);
            if (!cls.note.empty()) row["note"] = cls.note;
            row["conjugate_params"] = conj.params();
            if (K && *K > 0.0 && p < 1.0) {
              if (conj.m() >= 1) {
                const auto [lo, hi] = ep_extremum_bounds(*K, static_cast<int>(conj.m()), p);
                row["bounds"] = {{"K", *K}, {"m", conj.m()}, {"lower", lo}, {"upper", hi},
                                 {"E_p_within", Ep >= lo && Ep <= hi}};
              } else {
                row["bounds"] = {{"K", *K}, {"m", 0}, {"note", "no interior conjugate points"}};
              }
            }
            csv << fmt(p) << "," << to_string(cls.p_regime) << "," << fmt(mat.v) << "," << fmt(Ep) << "," << fmt(L)
                << "," << cls.tangential_signature.positive << "," << cls.tangential_signature.negative << ","
                << cls.tangential_signature.zero << "," << cls.orthogonal_signature.positive << ","
                << cls.orthogonal_signature.negative << "," << cls.orthogonal_signature.zero << "," << conj.m()
                << "," << to_string(cls.verdict) << "\n";
            r.summary += "p = " + fmt(p) + ": " + to_string(cls.verdict) + "\n";
            results.push_back(row);
          }
          r.report["results"] = results;
        },
        metric);
  } catch (const NoConvergence& ex) {
    r.report["error"] = ex.what();
    r.exit_code = kGeodesicFailed;
    r.summary = std::string(ex.what()) + "\n";
  } catch (const NotAGeodesic& ex) {
    r.report["error"] = ex.what();
    r.exit_code = kGeodesicFailed;
    r.summary = std::string(ex.what()) + "\n";
  }
  r.csv = csv.str();
  return r;
}

// ------------------------------------------------------------------ survey

inline CommandResult cmd_survey(const ExperimentConfig& e) {
  const AnyMetric metric = make_metric(e.raw);
  const auto* sphere = std::get_if<Sphere>(&metric);
  if (sphere == nullptr || sphere->dim() != 2) throw ConfigError("survey needs metric.name = sphere with metric.dim = 2");
  const Config& c = e.raw;
  const std::string kx0 = c.has("survey.x0") ? "survey.x0" : "curve.x0";
  const std::string kx1 = c.has("survey.x1") ? "survey.x1" : "curve.x1";
  const Point x0 = point_key(c, kx0, 2);
  const Point x1 = point_key(c, kx1, 2);
  const auto wraps = static_cast<int>(c.integer("survey.wraps", 4));
  const SurveyTable table = sphere_wraparound_survey(*sphere, x0, x1, wraps, e.p_list, e.N);

  CommandResult r;
  r.report = header("survey", e);
  json rows = json::array();
  std::ostringstream csv;
  csv << "wraps,length,m,endpoint_conjugate";
  for (double p : e.p_list) csv << ",E_p[" << fmt(p) << "]";
  csv << "\n";
  for (const auto& row : table.rows) {
    json energies = json::array();
    csv << row.wraps << "," << fmt(row.length) << "," << row.conjugate_count << ","
        << (row.endpoint_conjugate ? "true" : "false");
    for (const auto& [p, v] : row.energies) {
      energies.push_back({{"p", p}, {"E_p", v}});
      csv << "," << fmt(v);
    }
    csv << "\n";
    rows.push_back({{"wraps", row.wraps},
                    {"length", row.length},
                    {"m", row.conjugate_count},
                    {"conjugate_params", row.conjugate_params},
                    {"endpoint_conjugate", row.endpoint_conjugate},
                    {"energies", energies}});
  }
  r.report["rows"] = rows;
  json checks;
  checks["m_strictly_increasing"] = table.conjugate_count_increasing();
  json mono = json::array();
  for (double p : e.p_list) mono.push_back({{"p", p}, {"monotone", table.energy_monotone(p)}});
  checks["energy_monotone"] = mono;
  r.report["checks"] = checks;
  r.csv = csv.str();
  r.summary = std::to_string(table.rows.size()) + " survey rows\n";
  return r;
}

// -------------------------------------------------------------------- emit

/// Writes `content` to `path` through a temporary file and a rename.
inline void write_atomically(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + tmp);
    f << content;
    if (!f) throw ConfigError("cannot write " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

inline std::string render(const CommandResult& r, const std::string& format) {
  return format == "csv" ? r.csv : r.report.dump(2) + "\n";
}

inline CommandResult run(const std::string& command, const ExperimentConfig& e) {
  log(LogLevel::info, "running " + command);
  if (command == "validate") return cmd_validate(e);
  if (command == "geodesic") return cmd_geodesic(e);
  if (command == "classify") return cmd_classify(e);
  if (command == "survey") return cmd_survey(e);
  throw ConfigError("unknown command " + command);
}

}  // namespace fpe::cli
