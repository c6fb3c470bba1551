#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "subtrack/harness/runner.hpp"

using namespace subtrack;
using namespace subtrack::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("subtrack_test_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig small_experiment(const fs::path& out) {
  ExperimentConfig cfg;
  apply_assignments(cfg, {{"sim.K", "12"},
                          {"sim.N", "900"},
                          {"sim.r_true", "3"},
                          {"tracker.r", "3"},
                          {"tracker.N_p", "300"},
                          {"run.seeds", "2"},
                          {"run.out", out.string()}});
  cfg.sim.N_p = cfg.tracker.N_p;
  return cfg;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SUBTRACK_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(Config, IniSectionsAndOverrides) {
  std::istringstream in("[sim]\nK = 16\nsnr_db = 10\n\n[tracker]\nr = 4\nmu = 0.01\n[run]\nseeds = 1,3-5\n");
  ExperimentConfig cfg;
  apply_assignments(cfg, read_ini(in));
  apply_assignments(cfg, {parse_override("tracker.mu=0.02")});
  EXPECT_EQ(cfg.sim.K, 16);
  EXPECT_DOUBLE_EQ(cfg.sim.snr_db, 10.0);
  EXPECT_EQ(cfg.tracker.r, 4);
  EXPECT_DOUBLE_EQ(cfg.tracker.mu, 0.02);
  EXPECT_EQ(cfg.run.seeds, (std::vector<std::uint64_t>{1, 3, 4, 5}));
}

TEST(Config, UnknownKeysAndBadValuesAreErrors) {
  ExperimentConfig cfg;
  EXPECT_THROW(apply_assignments(cfg, {{"sim.KK", "3"}}), ConfigError);
  EXPECT_THROW(apply_assignments(cfg, {{"sim.K", "abc"}}), ConfigError);
  EXPECT_THROW(apply_assignments(cfg, {{"sim.preset", "stormy"}}), ConfigError);
  EXPECT_THROW(parse_override("novalue"), ConfigError);
  std::istringstream in("K = 3\n");
  EXPECT_THROW(read_ini(in), ConfigError);
}

TEST(Config, PresetAppliesBeforeExplicitKeys) {
  ExperimentConfig cfg;
  apply_assignments(cfg, {{"sim.omega_q", "0.01"}, {"sim.preset", "rough"}});
  EXPECT_DOUBLE_EQ(cfg.sim.omega_q, 0.01);
  EXPECT_DOUBLE_EQ(cfg.sim.phi_drift, 0.05);
  ExperimentConfig calm;
  apply_assignments(calm, {{"sim.preset", "calm"}});
  EXPECT_DOUBLE_EQ(calm.sim.phi_drift, 0.0);
}

TEST(Config, ValidationMapsToConfigError) {
  ExperimentConfig cfg;
  apply_assignments(cfg, {{"tracker.r", "70"}});
  EXPECT_THROW(validate(cfg), ConfigError);
  ExperimentConfig bad_algo;
  apply_assignments(bad_algo, {{"run.algos", "lms,kalman"}});
  EXPECT_THROW(validate(bad_algo), ConfigError);
  ExperimentConfig cir;
  apply_assignments(cir, {{"sim.generator", "cir"}});
  EXPECT_THROW(validate(cir), ConfigError);
}

TEST(Csv, DoubleRoundTripIsExact) {
  const std::vector<double> xs{0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, std::nextafter(1.0, 2.0)};
  CsvWriter w({"x"});
  for (double x : xs) w.field(x).end_row();
  const auto t = parse_csv(w.str());
  ASSERT_EQ(t.rows.size(), xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_EQ(t.number(i, 0), xs[i]);
}

TEST(Csv, ComplexFieldsSplitIntoTwoColumns) {
  CsvWriter w({"n", "h_re", "h_im"});
  w.field(3).field(cplx(1.5, -2.0)).end_row();
  EXPECT_EQ(w.str(), "n,h_re,h_im\n3,1.5,-2\n");
  CsvWriter short_row({"a", "b"});
  short_row.field(1.0);
  EXPECT_ANY_THROW(short_row.end_row());
}

TEST(Cir, RoundTripThroughFile) {
  const auto dir = scratch_dir("cir");
  fs::create_directories(dir);
  ChannelTrajectory traj;
  traj.h = CMatrix::Random(5, 3);
  write_file((dir / "cir.csv").string(), cir_to_csv(traj));
  const auto back = load_cir_csv((dir / "cir.csv").string());
  EXPECT_EQ(back.h, traj.h);
}

TEST(Cir, RejectsMalformedTables) {
  const auto dir = scratch_dir("cir_bad");
  fs::create_directories(dir);
  auto load = [&](const std::string& body) {
    write_file((dir / "c.csv").string(), body);
    return load_cir_csv((dir / "c.csv").string());
  };
  EXPECT_THROW(load("n,k,h_re\n0,0,1\n"), DataError);
  EXPECT_THROW(load("n,k,h_re,h_im\n0,0,1,0\n0,0,1,0\n"), DataError);
  EXPECT_THROW(load("n,k,h_re,h_im\n0,0,1,0\n1,1,1,0\n"), DataError);
  EXPECT_THROW(load("n,k,h_re,h_im\n0,0,nan,0\n"), DataError);
  EXPECT_THROW(load("n,k,h_re,h_im\n0,0,x,0\n"), DataError);
  EXPECT_THROW(load_cir_csv((dir / "missing.csv").string()), DataError);
  // Column order is free.
  const auto t = load("h_im,k,n,h_re\n2,0,0,1\n");
  EXPECT_EQ(t.h(0, 0), cplx(1.0, 2.0));
}

TEST(Runner, RunWritesVerifiableDeterministicOutputs) {
  const auto a = scratch_dir("run_a"), b = scratch_dir("run_b");
  auto cfg = small_experiment(a);
  run_experiment(cfg);
  cfg.run.out_dir = b.string();
  run_experiment(cfg);
  EXPECT_TRUE(verify_manifest(a.string()).empty());
  for (const char* f : {"summary.csv", "errors.csv", "phi_traj.csv", "coherence_taps.csv",
                        "coherence_components.csv", "eigenspectrum.csv"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(read_file((a / f).string()), read_file((b / f).string())) << f;
  }
  const auto summary = read_csv((a / "summary.csv").string());
  EXPECT_EQ(summary.rows.size(), 2u * 3u);
  // Tampering is detected.
  write_file((a / "summary.csv").string(), "changed\n");
  EXPECT_EQ(verify_manifest(a.string()), std::vector<std::string>{"summary.csv"});
}

TEST(Runner, FiveSeedsGiveOneRowPerSeedAndAlgorithm) {
  const auto dir = scratch_dir("run_five");
  auto cfg = small_experiment(dir);
  apply_assignments(cfg, {{"run.seeds", "5"}, {"run.algos", "lms,asrmae"}, {"run.emit_errors", "false"}});
  run_experiment(cfg);
  const auto t = read_csv((dir / "summary.csv").string());
  EXPECT_EQ(t.rows.size(), 10u);
  EXPECT_FALSE(fs::exists(dir / "errors.csv"));
}

TEST(Runner, SingletonRankListSweep) {
  const auto dir = scratch_dir("sweep");
  auto cfg = small_experiment(dir);
  apply_assignments(cfg, {{"run.r_list", "3"}});
  sweep_rank(cfg);
  const auto t = read_csv((dir / "rank_sweep.csv").string());
  const auto cs = t.column("seed");
  int aggregates = 0;
  for (const auto& row : t.rows) aggregates += row[cs] == "mean";
  EXPECT_EQ(aggregates, 1);
  EXPECT_EQ(t.rows.size(), 3u);
}

TEST(Runner, CirGeneratorReplaysRecordedChannel) {
  const auto dir = scratch_dir("cir_run");
  fs::create_directories(dir);
  SimConfig sc;
  sc.K = 8;
  sc.r_true = 2;
  sc.N = 600;
  sc.N_p = 200;
  write_file((dir / "cir.csv").string(), cir_to_csv(synth_latent_channel(sc).first));
  ExperimentConfig cfg;
  apply_assignments(cfg, {{"sim.generator", "cir"},
                          {"sim.cir_file", (dir / "cir.csv").string()},
                          {"tracker.r", "2"},
                          {"tracker.N_p", "200"},
                          {"run.out", (dir / "out").string()}});
  run_experiment(cfg);
  EXPECT_EQ(read_csv((dir / "out" / "summary.csv").string()).rows.size(), 3u);
  apply_assignments(cfg, {{"tracker.r", "9"}});
  EXPECT_THROW(run_experiment(cfg), ConfigError);
}

TEST(Runner, ThreadCapFromEnvironment) {
  setenv("SUBTRACK_THREADS", "1", 1);
  EXPECT_EQ(worker_count(8), 1u);
  setenv("SUBTRACK_THREADS", "zero", 1);
  EXPECT_THROW(worker_count(8), ConfigError);
  unsetenv("SUBTRACK_THREADS");
  EXPECT_GE(worker_count(8), 1u);
  EXPECT_EQ(worker_count(1), 1u);
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch_dir("cli");
  const std::string small = " --override sim.K=8 --override sim.N=400 --override sim.r_true=2"
                            " --override tracker.r=2 --override tracker.N_p=100";
  EXPECT_EQ(run_cli("run --seed 1 --out " + dir.string() + small), 0);
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
  EXPECT_EQ(run_cli("run --override sim.bogus=1 --out " + dir.string()), 2);
  EXPECT_EQ(run_cli("run --override tracker.r=70 --out " + dir.string()), 2);
  EXPECT_EQ(run_cli("run --config /nonexistent.cfg"), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("run --seed 1 --override tracker.mu=50 --out " + dir.string() + small), 3);
  EXPECT_EQ(run_cli("run --seed 1 --out /proc/subtrack_out" + small), 4);
  EXPECT_EQ(run_cli("spectrum --seed 1 --out " + (dir / "spec").string() + small), 0);
  EXPECT_TRUE(fs::exists(dir / "spec" / "eigenspectrum.csv"));
}
