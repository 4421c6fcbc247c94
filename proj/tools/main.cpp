// Command-line front end: run | stability | mollify | moments | w2.
// Exit codes: 0 success, 2 usage/config/input error, 3 numerical failure.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "vpme/vpme.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path,
                  "configuration file (key = value lines)");
  cmd->add_option("--out", opts.out_dir, "output directory (overrides config)");
  cmd->add_option("--seed", opts.seed, "sampling seed (overrides config)");
}

vpme::ExperimentConfig resolve_config(const CommonOpts& opts) {
  vpme::ExperimentConfig cfg;
  if (!opts.config_path.empty()) cfg = vpme::load_config(opts.config_path);
  if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
  if (opts.seed) cfg.seed = *opts.seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kinetic mean-field simulation toolkit"};
  app.require_subcommand(1);

  CommonOpts run_opts, stab_opts, moll_opts, mom_opts, w2_opts;

  auto* run = app.add_subcommand("run", "integrate one configuration");
  add_common(run, run_opts);

  auto* stability =
      app.add_subcommand("stability", "perturbation-growth experiment");
  add_common(stability, stab_opts);
  std::vector<double> eps_list{0.1, 0.05, 0.025};
  stability->add_option("--eps", eps_list, "perturbation amplitudes");
  int trials = 1;
  stability->add_option("--trials", trials, "independent repetitions per eps");

  auto* mollify =
      app.add_subcommand("mollify", "smoothing-radius sensitivity experiment");
  add_common(mollify, moll_opts);
  std::vector<double> radii{0.2, 0.1, 0.05, 0.025};
  mollify->add_option("--radii", radii, "smoothing radii");

  auto* moments = app.add_subcommand("moments", "velocity-moment tracking");
  add_common(moments, mom_opts);
  std::vector<int> orders{2, 4, 6};
  moments->add_option("--orders", orders, "moment orders");

  auto* w2 = app.add_subcommand("w2", "transport distance between snapshots");
  add_common(w2, w2_opts);
  std::string snap_a, snap_b;
  w2->add_option("file_a", snap_a, "first snapshot")->required();
  w2->add_option("file_b", snap_b, "second snapshot")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      app.exit(e);
      return 0;
    }
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  return vpme::guarded(std::cerr, [&]() -> int {
    if (run->parsed())
      return vpme::cmd_run(resolve_config(run_opts), std::cout);
    if (stability->parsed())
      return vpme::cmd_stability(resolve_config(stab_opts), eps_list, trials,
                                 std::cout);
    if (mollify->parsed())
      return vpme::cmd_mollify(resolve_config(moll_opts), radii, std::cout);
    if (moments->parsed())
      return vpme::cmd_moments(resolve_config(mom_opts), orders, std::cout);
    if (w2->parsed())
      return vpme::cmd_w2(snap_a, snap_b, resolve_config(w2_opts), std::cout);
    return 2;  // unreachable: a subcommand is required
  });
}
