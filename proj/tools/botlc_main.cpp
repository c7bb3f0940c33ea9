// botlc: bearing-only target localization and circumnavigation benchmark.
//
// Subcommands:
//   run <scenario>        simulate one scenario, emit CSV/plots/report
//   compare <manifest>    run several methods on shared initial conditions
//   sweep <manifest>      settling times across initial estimate offsets
//   check <trajectory>    re-run the analysis layer on an existing CSV
//
// BOTLC_OUT, when set, provides the default output root.

#include <cstdlib>
#include <string>

#include <CLI11.hpp>

#include "botlc/cli.hpp"

namespace {

std::string default_out_root() {
  if (const char* env = std::getenv("BOTLC_OUT")) return env;
  return "out";
}

void add_emit_option(CLI::App* cmd, std::string& emit_spec) {
  cmd->add_option("--emit", emit_spec,
                  "comma-separated outputs to write: csv,svg,report (default: csv,report)");
}

botlc::cli::EmitOptions parse_emit(const std::string& spec) {
  if (spec.empty()) return {};
  botlc::cli::EmitOptions e{false, false, false};
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    auto comma = spec.find(',', pos);
    const std::string tok = spec.substr(pos, comma == std::string::npos ? spec.size() - pos
                                                                        : comma - pos);
    if (tok == "csv") e.csv = true;
    else if (tok == "svg") e.svg = true;
    else if (tok == "report") e.report = true;
    else if (!tok.empty()) throw CLI::ValidationError("--emit", "unknown output: " + tok);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return e;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bearing-only target localization and circumnavigation benchmark"};
  app.require_subcommand(1);

  std::string scenario_path, manifest_path, csv_path, out_dir, emit_spec;
  int jobs = 1;

  CLI::App* run = app.add_subcommand("run", "simulate one scenario");
  run->add_option("scenario", scenario_path, "scenario file")->required();
  run->add_option("-o,--out", out_dir, "output directory");
  add_emit_option(run, emit_spec);

  CLI::App* compare = app.add_subcommand("compare", "benchmark several methods");
  compare->add_option("manifest", manifest_path, "compare manifest file")->required();
  compare->add_option("-o,--out", out_dir, "output directory");
  compare->add_option("-j,--jobs", jobs, "parallel runs (results are unaffected)");
  add_emit_option(compare, emit_spec);

  CLI::App* sweep = app.add_subcommand("sweep", "initial-offset settling sweep");
  sweep->add_option("manifest", manifest_path, "sweep manifest file")->required();
  sweep->add_option("-o,--out", out_dir, "output directory");

  CLI::App* check = app.add_subcommand("check", "re-run analysis on a trajectory CSV");
  check->add_option("trajectory", csv_path, "trajectory.csv produced by run")->required();

  CLI11_PARSE(app, argc, argv);

  botlc::cli::RunManifest manifest;
  try {
    manifest.emit = parse_emit(emit_spec);
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return botlc::cli::kExitConfigError;
  }
  manifest.jobs = jobs;

  if (run->parsed()) {
    manifest.scenario_paths = {scenario_path};
    manifest.out_dir = out_dir.empty() ? default_out_root() + "/run" : out_dir;
    return botlc::cli::cmd_run(manifest);
  }
  if (compare->parsed()) {
    manifest.out_dir = out_dir.empty() ? default_out_root() + "/compare" : out_dir;
    return botlc::cli::cmd_compare(manifest_path, manifest);
  }
  if (sweep->parsed()) {
    manifest.out_dir = out_dir.empty() ? default_out_root() + "/sweep" : out_dir;
    return botlc::cli::cmd_sweep(manifest_path, manifest);
  }
  return botlc::cli::cmd_check(csv_path);
}
