// subtrack: run tracker comparisons, rank sweeps and training-phase analyses.
//
// exit codes: 0 ok, 2 invalid configuration, 3 runtime/numeric failure,
//             4 output I/O failure

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "subtrack/harness/config.hpp"
#include "subtrack/harness/runner.hpp"

namespace h = subtrack::harness;

namespace {

struct CommonOptions {
  std::string config;
  std::string seed;
  std::string seeds;
  std::string out;
  std::string algos;
  std::string preset;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* sub, CommonOptions& o) {
  sub->add_option("--config", o.config, "INI config file ([sim], [tracker], [run] sections)");
  auto* one = sub->add_option("--seed", o.seed, "single seed");
  auto* many = sub->add_option("--seeds", o.seeds, "seed count N (1..N) or list such as 3,7,10-12");
  one->excludes(many);
  sub->add_option("--out", o.out, "output directory");
  sub->add_option("--algos", o.algos, "comma list from lms,asrmae,dfb_asrmae");
  sub->add_option("--preset", o.preset, "sea-state preset")->check(CLI::IsMember({"calm", "rough"}));
  sub->add_option("--override", o.overrides, "key=value, applied last (repeatable)");
}

h::ExperimentConfig resolve(const CommonOptions& o, h::Assignments extra) {
  h::Assignments kv;
  if (!o.preset.empty()) kv.emplace_back("sim.preset", o.preset);
  if (!o.seed.empty()) kv.emplace_back("run.seed", o.seed);
  if (!o.seeds.empty()) kv.emplace_back("run.seeds", o.seeds);
  if (!o.out.empty()) kv.emplace_back("run.out", o.out);
  if (!o.algos.empty()) kv.emplace_back("run.algos", o.algos);
  for (auto& e : extra) kv.push_back(std::move(e));
  for (const auto& s : o.overrides) kv.push_back(h::parse_override(s));
  return h::load_config(o.config, kv);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subspace channel tracking experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", h::kToolVersion);

  CommonOptions run_o, sweep_o, coh_o, spec_o;
  std::string r_list;
  auto* run = app.add_subcommand("run", "compare algorithms over seeds");
  add_common(run, run_o);
  auto* sweep = app.add_subcommand("sweep-rank", "mean error as a function of subspace rank");
  add_common(sweep, sweep_o);
  sweep->add_option("--r-list", r_list, "ranks, e.g. 1-20 or 4,8,12");
  auto* coh = app.add_subcommand("coherence", "cross-path coherence of taps and components");
  add_common(coh, coh_o);
  auto* spectrum_cmd = app.add_subcommand("spectrum", "normalized eigenvalue spectrum of the training covariance");
  add_common(spectrum_cmd, spec_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    h::RunManifest m;
    if (run->parsed()) {
      m = h::run_experiment(resolve(run_o, {}));
    } else if (sweep->parsed()) {
      h::Assignments extra;
      if (!r_list.empty()) extra.emplace_back("run.r_list", r_list);
      m = h::sweep_rank(resolve(sweep_o, extra));
    } else if (coh->parsed()) {
      m = h::coherence_analysis(resolve(coh_o, {}));
    } else {
      m = h::spectrum_analysis(resolve(spec_o, {}));
    }
    std::cout << "wrote";
    for (const auto& [name, _] : m.files) std::cout << ' ' << name;
    std::cout << " manifest.json (" << m.wall_seconds << " s)\n";
    return 0;
  } catch (const h::ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return 2;
  } catch (const h::IoError& e) {
    std::cerr << "output error: " << e.what() << '\n';
    return 4;
  } catch (const subtrack::Error& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return 3;
  }
}
