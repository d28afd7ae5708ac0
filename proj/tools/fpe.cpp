// fpe: run p-energy experiments from a key = value config file.
//
//   fpe validate --config metric.cfg
//   fpe classify --config arc.cfg --out report.json
//   fpe survey   --config survey.cfg --format csv --out table.csv

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fpe/cli/commands.hpp"

int main(int argc, char** argv) {
  using namespace fpe::cli;
  CLI::App app{"Finsler p-energy experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  std::string format;
  long long seed = -1;
  bool quiet = false;
  for (const char* name : {"validate", "geodesic", "classify", "survey"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config (key = value lines)")->required();
    sub->add_option("--out", out, "report path; stdout when omitted");
    sub->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--seed", seed, "random seed")->check(CLI::NonNegativeNumber);
    sub->add_flag("--quiet", quiet, "suppress the summary");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  CommandResult result;
  std::string output_path;
  std::string output_format;
  std::string curve_path;
  try {
    Config cfg = Config::load(config_path);
    if (!out.empty()) cfg.set("output.path", out);
    if (!format.empty()) cfg.set("output.format", format);
    if (seed >= 0) cfg.set("seed", std::to_string(seed));
    const ExperimentConfig e = ExperimentConfig::from(cfg);
    output_path = e.output_path;
    output_format = e.format;
    curve_path = cfg.str("output.curve", "");
    result = run(command, e);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const fpe::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }

  const std::string text = render(result, output_format);
  try {
    if (output_path.empty()) {
      std::cout << text;
    } else {
      write_atomically(output_path, text);
    }
    if (!curve_path.empty() && !result.curve_csv.empty()) write_atomically(curve_path, result.curve_csv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
  if (!quiet && !output_path.empty()) std::cout << result.summary;
  return result.exit_code;
}
