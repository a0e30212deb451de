#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "dbsloc/errors.hpp"
#include "dbsloc/experiment.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kPartial = 3, kIo = 4 };

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> modes;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "experiment config (JSON)");
  cmd->add_option("--seed", o.seed, "global seed");
  cmd->add_option("--workers", o.workers, "worker threads");
  cmd->add_option("--modes", o.modes, "comma-separated subset of baseline,mcdo,tta,hybrid");
  cmd->add_option("--out", o.out, "output directory");
}

dbsloc::ExperimentConfig resolve(const Overrides& o) {
  dbsloc::ExperimentConfig cfg = o.config.empty() ? dbsloc::ExperimentConfig{} : dbsloc::load_experiment_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.workers) cfg.workers = *o.workers;
  if (o.out) cfg.out_dir = *o.out;
  if (o.modes) {
    cfg.modes.clear();
    std::istringstream in(*o.modes);
    for (std::string m; std::getline(in, m, ',');)
      if (!m.empty()) cfg.modes.push_back(m);
  }
  dbsloc::validate(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage target localization with Monte Carlo uncertainty"};
  app.require_subcommand(1);
  Overrides o;
  CLI::App* gen = app.add_subcommand("generate", "write a phantom cohort and its manifest");
  CLI::App* run = app.add_subcommand("run", "run the pipeline on every case and write results.csv");
  CLI::App* ana = app.add_subcommand("analyze", "upper-whisker rejection report from results.csv");
  for (CLI::App* c : {gen, run, ana}) add_common(c, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    const dbsloc::ExperimentConfig cfg = resolve(o);
    if (gen->parsed()) {
      dbsloc::cmd_generate(cfg);
      std::cout << "wrote " << cfg.cases << " cases to " << cfg.manifest_path().string() << "\n";
      return kOk;
    }
    if (run->parsed()) {
      const dbsloc::RunReport r = dbsloc::cmd_run(cfg);
      std::cout << "wrote " << r.rows.size() << " rows to " << (cfg.out_dir / "results.csv").string() << "\n";
      if (r.failed_cases > 0) {
        std::cerr << r.failed_cases << " case(s) had failures\n";
        return kPartial;
      }
      return kOk;
    }
    const dbsloc::AnalyzeReport r = dbsloc::cmd_analyze(cfg);
    for (const std::string& w : r.warnings) std::cerr << "warning: " << w << "\n";
    for (const dbsloc::ModeReport& m : r.modes) {
      if (m.skipped) continue;
      std::cout << m.mode << ": flagged " << m.stats.flagged.size() << " (" << m.true_flags << " labelled), fence "
                << m.stats.upper_fence << "\n";
    }
    return kOk;
  } catch (const dbsloc::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const dbsloc::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const dbsloc::SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kPartial;
  }
}
