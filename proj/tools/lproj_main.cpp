// Command-line front end: configuration-driven estimation of state-dependent
// impulse responses and cumulative multipliers from quarterly series.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "lproj/app.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_override;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs* args) {
  cmd->add_option("--config", args->config_path, "JSON configuration file")->required();
  cmd->add_option("--out", args->out_override, "output directory override");
  cmd->add_option("--seed", args->seed, "seed override")
      ->each([args](const std::string&) { args->seed_set = true; });
  cmd->add_option("--threads", args->threads, "worker thread count override");
}

lproj::RunConfig load(const CommonArgs& args) {
  lproj::RunConfig cfg = lproj::parse_config(args.config_path);
  if (!args.out_override.empty()) cfg.output_dir = args.out_override;
  if (args.seed_set) cfg.seed = args.seed;
  if (args.threads > 0) cfg.threads = args.threads;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"local-projection estimation of state-dependent fiscal responses"};
  app.require_subcommand(1);

  CommonArgs args;
  auto* validate = app.add_subcommand("validate", "check configuration and data coverage");
  auto* states = app.add_subcommand("states", "build and write the regime weight series");
  auto* identify = app.add_subcommand("identify", "identify and write shock series");
  auto* irf = app.add_subcommand("irf", "estimate impulse response functions");
  auto* multiplier = app.add_subcommand("multiplier", "estimate cumulative multipliers");
  auto* run_all = app.add_subcommand("run-all", "full pipeline plus manifest");
  for (auto* cmd : {validate, states, identify, irf, multiplier, run_all})
    add_common(cmd, &args);

  CLI11_PARSE(app, argc, argv);

  try {
    lproj::Runner runner(load(args));
    if (validate->parsed()) {
      for (const auto& d : runner.validate()) std::printf("%s\n", d.c_str());
    } else if (states->parsed()) {
      runner.run_states();
    } else if (identify->parsed()) {
      runner.run_identify();
      runner.write_manifest();
    } else if (irf->parsed()) {
      runner.run_irf();
    } else if (multiplier->parsed()) {
      runner.run_multiplier();
    } else if (run_all->parsed()) {
      runner.run_all();
    }
  } catch (const lproj::config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const lproj::identification_error& e) {
    std::fprintf(stderr, "identification failure: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "estimation error: %s\n", e.what());
    return 3;
  }
  return 0;
}
