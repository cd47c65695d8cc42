// Command-line front end for the artificial-background workbench.
//
//   artbg pipeline  --config run.cfg [--stage NAME] [--out DIR] [--seed N] [--alpha A] [--jobs J]
//   artbg simulate | background | indicator | spectrum | recover  --config run.cfg [...]
//   artbg verify    [--config run.cfg] [--out DIR]
//
// Exit status: 0 success, 1 a stage failed, 2 bad usage or configuration.

#include <algorithm>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "artbg/artbg.hpp"

namespace {

struct Options {
  std::string config;
  std::string stage;
  std::optional<std::string> out;
  std::optional<long> seed;
  std::optional<double> alpha;
  std::optional<int> jobs;
};

artbg::RunConfig effective_config(const Options& o, bool config_required) {
  artbg::RunConfig cfg;
  if (!o.config.empty()) {
    cfg = artbg::load_run_config(o.config);
  } else if (config_required) {
    throw artbg::InvalidArgument("--config is required for this command");
  } else {
    cfg.medium = artbg::MediumSpec::homogeneous(artbg::Disk{{0.0, 0.0}, 1.0}, 2.0);
  }
  if (o.out) cfg.out_dir = *o.out;
  if (o.seed) {
    if (*o.seed < 0) throw artbg::InvalidArgument("--seed must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(*o.seed);
  }
  if (o.alpha) cfg.alpha.relative = *o.alpha;
  if (o.jobs) cfg.jobs = *o.jobs;
  cfg.validate();
  return cfg;
}

void print_summary(const artbg::RunConfig& cfg, const artbg::PipelineResult& res) {
  for (const auto& [stage, status] : res.log.stages) std::cout << stage << ": " << status << "\n";
  for (const auto& w : res.log.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& e : res.log.errors) std::cerr << "error: " << e << "\n";
  const artbg::RunPaths paths{cfg.out_dir};
  if (std::filesystem::exists(paths.peaks())) {
    for (const auto& p : artbg::read_peaks(paths.peaks().string()).peaks)
      std::cout << "peak k=" << p.k << " prominence=" << p.prominence << "\n";
  }
  if (std::filesystem::exists(paths.report())) {
    for (const auto& [k, v] : artbg::read_key_values(paths.report().string()))
      if (k == "index_estimate" || k.rfind("ess_", 0) == 0) std::cout << k << " = " << v << "\n";
  }
  std::cout << "manifest: " << res.manifest.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Artificial-background transmission eigenvalue workbench"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub, bool with_stage) {
    sub->add_option("--config", opt.config, "Run configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "Output directory (overrides [output] dir)");
    sub->add_option("--seed", opt.seed, "Noise seed (overrides [noise] seed)");
    sub->add_option("--alpha", opt.alpha, "Regularization alpha (overrides [indicator] alpha)");
    sub->add_option("--jobs", opt.jobs, "Worker threads for per-k work")->check(CLI::PositiveNumber);
    if (with_stage)
      sub->add_option("--stage", opt.stage, "Resume the pipeline at this stage")
          ->check(CLI::IsMember(artbg::stage_names()));
  };

  std::vector<CLI::App*> subs;
  subs.push_back(app.add_subcommand("pipeline", "Run every stage"));
  add_common(subs.back(), true);
  for (const auto& name : artbg::stage_names()) {
    subs.push_back(app.add_subcommand(name, "Run the " + name + " stage"));
    add_common(subs.back(), false);
  }

  CLI11_PARSE(app, argc, argv);

  const CLI::App* chosen = app.get_subcommands().front();
  const std::string cmd = chosen->get_name();
  artbg::RunConfig cfg;
  try {
    cfg = effective_config(opt, cmd != "verify");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  std::vector<std::string> stages;
  if (cmd == "pipeline") {
    const auto& all = artbg::stage_names();
    auto from = opt.stage.empty() ? all.begin() : std::find(all.begin(), all.end(), opt.stage);
    stages.assign(from, all.end());
  } else {
    stages.push_back(cmd);
  }

  const auto res = artbg::run_stages(cfg, stages);
  print_summary(cfg, res);
  return res.ok ? 0 : 1;
}
