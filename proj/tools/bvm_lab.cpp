#include "bvmlab/config.hpp"
#include "bvmlab/errors.hpp"
#include "bvmlab/experiments.hpp"
#include "bvmlab/version.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace {

// "--key value" and "--key=value" pairs left over by the parser.
std::map<std::string, std::string> overrides(const std::vector<std::string>& extras) {
  std::map<std::string, std::string> out;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& arg = extras[i];
    if (arg.rfind("--", 0) != 0) throw bvmlab::ConfigInvalid("unexpected argument '" + arg + "'");
    const auto eq = arg.find('=');
    if (eq != std::string::npos) {
      out[arg.substr(2, eq - 2)] = arg.substr(eq + 1);
    } else if (i + 1 < extras.size()) {
      out[arg.substr(2)] = extras[++i];
    } else {
      throw bvmlab::ConfigInvalid("missing value for '" + arg + "'");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo harness for non-asymptotic Bernstein-von Mises bounds", "bvm-lab"};
  app.set_version_flag("--version", std::string(bvmlab::kVersion));
  bool list = false;
  app.add_flag("--list", list, "List the experiments");

  struct Options {
    std::string config;
    std::string seed;
    std::string out;
    std::string jobs;
  };
  std::map<std::string, Options> options;
  std::map<std::string, CLI::App*> subs;
  for (const auto& info : bvmlab::experiment_registry()) {
    const std::string name(info.name);
    auto* sub = app.add_subcommand(name, std::string(info.summary));
    auto& o = options[name];
    sub->add_option("--config", o.config, "INI file with key = value settings");
    sub->add_option("--seed", o.seed, "Master seed");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--jobs", o.jobs, "Worker threads (default BVM_LAB_JOBS or all cores)");
    sub->allow_extras();
    subs[name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (list) {
    for (const auto& info : bvmlab::experiment_registry()) {
      std::cout << info.name << "\t" << info.summary << "\n";
    }
    return 0;
  }

  for (const auto& [name, sub] : subs) {
    if (!sub->parsed()) continue;
    try {
      const Options& o = options[name];
      bvmlab::ExperimentConfig config = bvmlab::default_config(name);
      if (!o.config.empty()) bvmlab::apply_settings(config, bvmlab::read_config_file(o.config));
      bvmlab::apply_settings(config, overrides(sub->remaining()));
      if (!o.seed.empty()) bvmlab::apply_setting(config, "seed", o.seed);
      if (!o.out.empty()) bvmlab::apply_setting(config, "out", o.out);
      if (!o.jobs.empty()) bvmlab::apply_setting(config, "jobs", o.jobs);
      if (config.experiment != name) {
        throw bvmlab::ConfigInvalid("config names experiment '" + config.experiment +
                                    "' but subcommand is '" + name + "'");
      }
      const bvmlab::RunOutcome outcome = bvmlab::run(config);
      for (const auto& f : outcome.files) std::cout << "wrote " << f.string() << "\n";
      for (const auto& note : outcome.result.skipped) std::cerr << "skipped " << note << "\n";
      const auto failed = outcome.result.failed_checks();
      std::cout << outcome.result.hard_checks().size() - failed.size() << "/"
                << outcome.result.hard_checks().size() << " checks passed\n";
      for (const auto* r : failed) {
        std::cerr << "FAIL " << r->metric << " n=" << bvmlab::format_double(r->n)
                  << " value=" << bvmlab::format_double(r->value);
        if (r->bound) std::cerr << " bound=" << bvmlab::format_double(*r->bound);
        std::cerr << "\n";
      }
      return outcome.exit_code;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
  }
  std::cerr << app.help();
  return 2;
}
