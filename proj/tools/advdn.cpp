#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <omp.h>

#include <CLI11.hpp>

#include "advdn/errors.hpp"
#include "advdn/experiment.hpp"

namespace {

struct Common {
  std::string config;
  std::optional<std::string> out;
  int jobs = 0;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("-o,--out", c.out, "output directory (default: config output, $ADVDN_OUTPUT_ROOT/<run id>, or runs/<run id>)");
  cmd->add_option("-j,--jobs", c.jobs, "worker threads (default: all cores)")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", c.seed, "override the global seed");
  cmd->add_option("--set", c.overrides, "override a scalar field, e.g. --set transfer.threshold=0.5");
}

int run(const std::string& command, const std::string& mode, const Common& c) {
  std::vector<std::string> overrides = c.overrides;
  if (c.seed) overrides.push_back("seed=" + std::to_string(*c.seed));
  const advdn::ExperimentConfig cfg = advdn::load_config(c.config, overrides);
  if (c.jobs > 0) omp_set_num_threads(c.jobs);
  if (command == "validate") {
    std::cout << c.config << ": ok (config hash " << std::hex << cfg.hash() << std::dec << ")\n";
    return 0;
  }
  advdn::ArtifactStore store(advdn::resolve_output_dir(cfg, c.out));
  advdn::run_command(command, mode, cfg, store, &std::cerr);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"advdn: adversarial attacks on learned image denoisers"};
  app.require_subcommand(1);
  app.set_version_flag("--version", advdn::code_version());

  Common common;
  std::string mode = "pgd";
  std::string command;
  const std::vector<std::pair<const char*, const char*>> commands = {
      {"corpus", "synthesize the train/test corpora named by the config"},
      {"train", "train every model in the models list"},
      {"attack", "attack the test set (pgd | l2pgd | clean)"},
      {"sweep", "sample the circle spanned by noise and perturbation"},
      {"combine", "probe convex combinations of adversarial pairs"},
      {"transfer", "transferability matrix across models"},
      {"advtrain", "adversarial retraining and gap certification"},
      {"resist", "classical-denoiser resistance test"},
      {"report", "aggregate persisted records into summary tables"},
      {"validate", "check a config against the schema"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub, common);
    if (std::string(name) == "attack")
      sub->add_option("mode", mode, "attack variant")->check(CLI::IsMember({"pgd", "l2pgd", "clean"}));
    sub->callback([&command, n = std::string(name)] { command = n; });
  }
  CLI::App* schema = app.add_subcommand("schema", "print the experiment config schema");
  schema->callback([&command] { command = "schema"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (command == "schema") {
    std::cout << advdn::experiment_schema();
    return 0;
  }
  try {
    return run(command, mode, common);
  } catch (const advdn::ConfigError& e) {
    std::cerr << "invalid config:\n" << e.what() << '\n';
    return 2;
  } catch (const advdn::ResolutionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const advdn::ArtifactConflict& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
