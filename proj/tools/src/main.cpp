#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "minsup/cli/config.hpp"
#include "minsup/cli/runner.hpp"
#include "minsup/cli/scenarios.hpp"

namespace {

struct Flags {
  std::string config_path;
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::uint64_t> workers;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read config file " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Builds the config from --config or --scenario, then applies flag overrides.
minsup::cli::RunConfig load(const Flags& f, const std::string& only_check) {
  std::string text;
  if (!f.config_path.empty()) {
    text = read_file(f.config_path);
  } else if (!f.scenario.empty()) {
    if (!f.seed) throw std::runtime_error("seed required (pass --seed with --scenario)");
    text = "{\"scenario\":\"" + f.scenario + "\",\"seed\":" + std::to_string(*f.seed) + "}";
  } else {
    throw std::runtime_error("either --config or --scenario is required");
  }
  minsup::cli::RunConfig c = minsup::cli::parse_config(text);
  if (f.seed) c.seed = *f.seed;
  if (f.workers) c.workers = *f.workers;
  if (!only_check.empty()) c.checks = {only_check};
  if (const char* env = std::getenv("MINSUP_OUT"); env && *env) c.output_dir = env;
  if (!f.out.empty()) c.output_dir = f.out;
  // Re-validate so overrides obey the same bounds as file keys.
  return minsup::cli::parse_config(minsup::cli::serialize_config(c));
}

int execute(const Flags& f, const std::string& only_check) {
  const minsup::cli::RunConfig c = load(f, only_check);
  const minsup::cli::RunManifest m = minsup::cli::run(c, c.output_dir);
  for (const auto& [name, verdict] : m.verdicts) std::cout << name << ": " << verdict << "\n";
  for (const auto& d : m.diagnostics) std::cerr << "error: " << d << "\n";
  std::cout << "output: " << c.output_dir << " (exit " << m.exit_code << ")\n";
  return m.exit_code;
}

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config_path, "JSON run configuration");
  sub->add_option("--scenario", f.scenario, "registry scenario used when no config file is given");
  sub->add_option("--seed", f.seed, "overrides the config seed");
  sub->add_option("--out", f.out, "output directory (beats MINSUP_OUT and the config)");
  sub->add_option("--workers", f.workers, "bounded worker pool size");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"minsup: ladder solver and verification harness"};
  app.set_version_flag("--version", std::string(minsup::cli::kVersion));
  app.require_subcommand(1);

  Flags flags;
  std::string selected;
  std::vector<std::pair<std::string, std::string>> subs = {
      {"run", "run every check listed in the config"},
      {"solve", "PDE ladder solve; writes surface.csv"},
      {"ladder", "ladder monotonicity of generators and surfaces"},
      {"conjugate", "Huber ladder and biconjugation trials"},
      {"stability", "stability of u(0, x_k) along a sequence x_k"},
      {"locality", "locality of the solution under path concatenation"},
      {"markov", "Markov identity between the BSDE and the surface"},
      {"shift", "time-shift identity"},
      {"viscosity", "discrete viscosity residual"},
      {"lsc", "lower semicontinuity of the surface"},
      {"limits", "epi-limit demos"},
  };
  for (const auto& [name, help] : subs) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub, flags);
    sub->callback([&selected, name = name] { selected = name; });
  }
  app.add_subcommand("list", "list registry scenarios")->callback([&selected] { selected = "list"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (selected == "list") {
      for (const auto& s : minsup::cli::scenario_registry()) std::cout << s.name << "\t" << s.description << "\n";
      return 0;
    }
    return execute(flags, selected == "run" ? std::string{} : selected);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
