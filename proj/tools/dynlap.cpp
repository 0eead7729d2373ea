#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>

#include "dynlap/error.hpp"
#include "dynlap/experiment.hpp"
#include "dynlap/parallel.hpp"

namespace {

int execute(dynlap::ExperimentConfig cfg, const std::optional<std::string>& convention, bool quiet) {
  if (convention) cfg.convention = dynlap::convention_from_name(*convention);
  const dynlap::CaseResult r = dynlap::run_experiment(cfg, quiet ? nullptr : &std::cerr);
  if (!quiet) {
    for (const auto& [k, v] : r.values) std::cout << k << " = " << v << '\n';
    std::cout << "bundle written to " << cfg.output_dir << '\n';
  }
  if (!r.ok()) {
    std::cerr << "check failures:\n";
    for (const auto& c : r.checks)
      if (!c.pass) std::cerr << "  " << c.name << ": " << c.detail << '\n';
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic Laplacian coherent-set partitioning"};
  app.require_subcommand(1);
  int threads = 0;
  std::optional<std::string> convention;
  bool quiet = false;
  app.add_option("--threads", threads, "worker threads (0 = hardware concurrency)")->check(CLI::NonNegativeNumber);
  app.add_option("--convention", convention, "override the operator convention")
      ->check(CLI::IsMember({"raw", "with_half"}));
  app.add_flag("--quiet", quiet, "suppress progress and summary output");

  auto* run = app.add_subcommand("run", "run an experiment from a config file");
  std::string config_path;
  run->add_option("config", config_path, "config file (key = value lines)")->required();

  auto* preset = app.add_subcommand("preset", "run a built-in preset");
  std::string preset_name;
  std::optional<std::string> out_dir;
  preset->add_option("name", preset_name, "preset name")->required();
  preset->add_option("--out", out_dir, "output directory");

  auto* presets = app.add_subcommand("presets", "list built-in presets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (threads > 0) dynlap::set_thread_count(threads);
    if (*presets) {
      for (const auto& p : dynlap::list_presets()) std::cout << p.name << "  " << p.description << '\n';
      return 0;
    }
    if (*run) return execute(dynlap::load_config(config_path), convention, quiet);
    dynlap::ExperimentConfig cfg = dynlap::make_preset(preset_name);
    if (out_dir) cfg.output_dir = *out_dir;
    return execute(cfg, convention, quiet);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
