#include "experiments.hpp"

#include "levybel/version.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace levybel::cli;
  CLI::App app{"Gradient weights and Malliavin checks for SDEs driven by cylindrical Levy noise"};
  app.set_version_flag("--version", std::string(levybel::version_string()));
  app.require_subcommand(1);

  struct Flags {
    std::string config;
    RunOptions opts;
    std::uint64_t seed = 0;
    int workers = 0;
  };
  std::vector<std::pair<CLI::App*, Flags>> subs;
  subs.reserve(experiment_kinds().size());
  for (const auto& kind : experiment_kinds()) {
    subs.emplace_back(app.add_subcommand(kind, "run the " + kind + " experiment"), Flags{});
  }
  for (auto& [sub, f] : subs) {
    sub->add_option("--config", f.config, "experiment config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", f.opts.out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", f.seed, "master seed (overrides run.seed)");
    sub->add_option("--workers", f.workers, "worker threads; LEVYBEL_WORKERS takes precedence")
        ->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  for (auto& [sub, f] : subs) {
    if (!sub->parsed()) continue;
    if (sub->count("--seed")) f.opts.seed = f.seed;
    if (sub->count("--workers")) f.opts.workers = f.workers;
    return run_guarded(sub->get_name(), f.config, f.opts, std::cout, std::cerr);
  }
  return kConfigError;
}
