#ifndef SUBTRACK_HARNESS_RUNNER_HPP_
#define SUBTRACK_HARNESS_RUNNER_HPP_

// Experiment orchestration for the four CLI commands. Seeds (and, for the
// rank sweep, seed x rank pairs) run on a small worker pool; every job writes
// only into its own result slot and all files are produced afterwards on the
// calling thread, so output bytes do not depend on the thread count.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "subtrack/harness/config.hpp"
#include "subtrack/harness/csv.hpp"
#include "subtrack/harness/manifest.hpp"
#include "subtrack/metrics.hpp"
#include "subtrack/tracker_pipeline.hpp"

namespace subtrack::harness {

/// Worker count: hardware concurrency, capped by SUBTRACK_THREADS and by the
/// number of jobs.
inline unsigned worker_count(std::size_t jobs) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SUBTRACK_THREADS"); env && *env) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (*end != '\0' || cap < 1)
      throw ConfigError("SUBTRACK_THREADS must be a positive integer, got '" + std::string(env) + "'");
    n = std::min<unsigned long>(n, static_cast<unsigned long>(cap));
  }
  return static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(n, jobs)));
}

/// Runs fn(i) for i in [0, jobs). The first failure (lowest index) is
/// rethrown after all workers stop.
template <class Fn>
void parallel_for(std::size_t jobs, Fn&& fn) {
  const unsigned workers = worker_count(jobs);
  std::vector<std::exception_ptr> errors(jobs);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < jobs;) {
      if (failed.load()) break;
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
        failed.store(true);
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Observations for one seed under the configured generator. `cir` must be
/// loaded when the generator is cir.
inline ObservationSequence make_observations(const ExperimentConfig& cfg, std::uint64_t seed,
                                             const ChannelTrajectory* cir = nullptr) {
  SimConfig sim = cfg.sim;
  sim.seed = seed;
  sim.N_p = cfg.tracker.N_p;
  switch (cfg.generator) {
    case Generator::latent:
      return make_latent_scenario(sim).obs;
    case Generator::physical: {
      const auto pulse = PulseShape::raised_cosine(sim.pulse_span, cfg.pulse_rolloff, 1.0);
      const auto paths = random_paths(sim, cfg.physical_paths, pulse.span());
      const auto traj = synth_physical_channel(paths, pulse, sim);
      const auto symbols = gen_symbols(sim.N, seed);
      return generate_observations(traj, symbols, noise_var_for_snr(traj, sim.snr_db), seed);
    }
    case Generator::cir: {
      if (!cir) throw InvalidInput("harness_cli::make_observations", "no CIR trajectory loaded");
      const auto symbols = gen_symbols(static_cast<int>(cir->length()), seed);
      return generate_observations(*cir, symbols, noise_var_for_snr(*cir, sim.snr_db), seed);
    }
  }
  throw InvalidInput("harness_cli::make_observations", "unknown generator");
}

/// asrmae always runs the plain baseline; dfb_asrmae uses the tracker.*
/// enhancement flags (all on by default).
inline TrackResult run_algorithm(const std::string& algo, const ObservationSequence& obs,
                                 const TrackerConfig& tc) {
  if (algo == "lms") return run_lms(obs, tc);
  if (algo == "asrmae") return run_asrmae(obs, tc);
  if (algo == "dfb_asrmae") {
    auto res = run_tracker(obs, tc);
    res.algo = algo;
    return res;
  }
  throw InvalidInput("harness_cli::run_algorithm", "unknown algorithm '" + algo + "'");
}

class OutputDir {
public:
  explicit OutputDir(std::string dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec || !std::filesystem::is_directory(dir_))
      throw IoError("cannot create output directory '" + dir_ + "'");
  }

  void write(const std::string& name, const std::string& body) {
    write_file(dir_ + "/" + name, body);
    manifest.files[name] = sha256_hex(body);
  }

  void finish(double wall_seconds) {
    manifest.wall_seconds = wall_seconds;
    write_file(dir_ + "/manifest.json", manifest.to_json().dump(2) + "\n");
  }

  const std::string& path() const { return dir_; }

  RunManifest manifest;

private:
  std::string dir_;
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline std::optional<ChannelTrajectory> load_cir(const ExperimentConfig& cfg) {
  if (cfg.generator != Generator::cir) return std::nullopt;
  ChannelTrajectory t;
  try {
    t = load_cir_csv(cfg.cir_file, cfg.sim.T_b, cfg.sim.T_g);
  } catch (const DataError& e) {
    throw ConfigError(std::string("sim.cir_file: ") + e.what());
  }
  try {
    cfg.tracker.validate(static_cast<int>(t.taps()), t.length());
    for (int r : cfg.run.r_list)
      if (r > t.taps())
        throw InvalidInput("run.r_list", "rank " + std::to_string(r) + " exceeds K = " + std::to_string(t.taps()));
  } catch (const Error& e) {
    throw ConfigError(std::string(e.what()) + " (CIR file)");
  }
  return t;
}

struct TrainingAnalysis {
  CoherenceMatrix taps;
  CoherenceMatrix components;
  RVector spectrum;
};

/// Coherence and eigen-spectrum of the training-phase LMS estimates.
inline TrainingAnalysis analyse_training(const ObservationSequence& obs, const TrackerConfig& tc) {
  tc.validate(obs.K, obs.length());
  LmsConfig lc;
  lc.mu = tc.mu;
  const auto lms = lms_track(obs, lc);
  const auto cm = fit_coarse_model(lms.h, tc.N_p, tc.r, tc.p);
  TrainingAnalysis a;
  a.taps = cross_path_coherence(lms.h.topRows(tc.N_p), CoherenceKind::taps);
  a.components = cross_path_coherence(cm.z_lms, CoherenceKind::components);
  a.spectrum = eigenvalue_spectrum(cm.R_h);
  return a;
}

inline void add_coherence_rows(CsvWriter& w, std::uint64_t seed, const CoherenceMatrix& c) {
  for (Eigen::Index j = 0; j < c.rho.rows(); ++j)
    for (Eigen::Index k = 0; k < c.rho.cols(); ++k)
      w.field(seed).field(j).field(k).field(c.rho(j, k)).field(std::abs(c.rho(j, k))).end_row();
}

inline const std::vector<std::string> kCoherenceHeader{"seed", "j", "k", "rho_re", "rho_im", "abs_rho"};

inline void write_analysis(OutputDir& out, const std::vector<std::uint64_t>& seeds,
                           const std::vector<TrainingAnalysis>& an, bool coherence, bool spectrum) {
  if (coherence) {
    CsvWriter wt(kCoherenceHeader), wc(kCoherenceHeader);
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      add_coherence_rows(wt, seeds[s], an[s].taps);
      add_coherence_rows(wc, seeds[s], an[s].components);
    }
    out.write("coherence_taps.csv", wt.str());
    out.write("coherence_components.csv", wc.str());
  }
  if (spectrum) {
    CsvWriter w({"seed", "k", "lambda_norm"});
    for (std::size_t s = 0; s < seeds.size(); ++s)
      for (Eigen::Index k = 0; k < an[s].spectrum.size(); ++k)
        w.field(seeds[s]).field(k + 1).field(an[s].spectrum(k)).end_row();
    out.write("eigenspectrum.csv", w.str());
  }
}

inline void begin_manifest(OutputDir& out, const ExperimentConfig& cfg, const std::string& command) {
  out.manifest.command = command;
  out.manifest.config = cfg.snapshot();
}

}  // namespace detail

/// `run`: every algorithm on every seed.
inline RunManifest run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto t0 = detail::Clock::now();
  const auto cir = detail::load_cir(cfg);
  const auto& seeds = cfg.run.seeds;
  const auto& algos = cfg.run.algos;

  struct SeedResult {
    std::vector<TrackResult> results;
    std::optional<detail::TrainingAnalysis> analysis;
    double wall = 0.0;
  };
  std::vector<SeedResult> slots(seeds.size());
  const bool need_analysis = cfg.run.emit_coherence || cfg.run.emit_spectrum;

  parallel_for(seeds.size(), [&](std::size_t i) {
    const auto ts = detail::Clock::now();
    const auto obs = make_observations(cfg, seeds[i], cir ? &*cir : nullptr);
    TrackerConfig tc = cfg.tracker;
    tc.keep_channel = false;
    for (const auto& a : algos) {
      auto res = run_algorithm(a, obs, tc);
      if (i != 0) res.abs_phi.resize(0, 0);
      res.coarse = CoarseModel{};
      slots[i].results.push_back(std::move(res));
    }
    if (need_analysis) slots[i].analysis = detail::analyse_training(obs, tc);
    slots[i].wall = detail::seconds_since(ts);
  });

  OutputDir out(cfg.run.out_dir);
  detail::begin_manifest(out, cfg, "run");

  CsvWriter summary({"seed", "algo", "mean_err_db", "train_len", "p", "r"});
  for (std::size_t i = 0; i < seeds.size(); ++i)
    for (std::size_t a = 0; a < algos.size(); ++a) {
      const bool lms = algos[a] == "lms";
      summary.field(seeds[i]).field(algos[a]).field(slots[i].results[a].error.mean_db).field(cfg.tracker.N_p);
      summary.field(lms ? 0 : cfg.tracker.p).field(lms ? 0 : cfg.tracker.r).end_row();
    }
  out.write("summary.csv", summary.str());

  if (cfg.run.emit_errors) {
    CsvWriter w({"seed", "algo", "n", "xi_re", "xi_im", "err_db"});
    for (std::size_t i = 0; i < seeds.size(); ++i)
      for (std::size_t a = 0; a < algos.size(); ++a) {
        const auto& res = slots[i].results[a];
        for (Eigen::Index n = 0; n < res.xi.size(); ++n)
          w.field(seeds[i]).field(algos[a]).field(n).field(res.xi(n)).field(res.error.per_n_db(n)).end_row();
      }
    out.write("errors.csv", w.str());
  }

  if (cfg.run.emit_phi) {
    // First seed; prefer the dynamic-coefficient tracker.
    const TrackResult* src = nullptr;
    for (const char* want : {"dfb_asrmae", "asrmae"})
      for (std::size_t a = 0; a < algos.size() && !src; ++a)
        if (algos[a] == want) src = &slots[0].results[a];
    if (src) {
      CsvWriter w({"n", "tap", "abs_phi"});
      for (Eigen::Index n = 0; n < src->abs_phi.rows(); ++n)
        for (Eigen::Index t = 0; t < src->abs_phi.cols(); ++t) w.field(n).field(t).field(src->abs_phi(n, t)).end_row();
      out.write("phi_traj.csv", w.str());
    }
  }

  if (need_analysis) {
    std::vector<detail::TrainingAnalysis> an;
    for (auto& s : slots) an.push_back(std::move(*s.analysis));
    detail::write_analysis(out, seeds, an, cfg.run.emit_coherence, cfg.run.emit_spectrum);
  }

  for (std::size_t i = 0; i < seeds.size(); ++i) out.manifest.runs.push_back({seeds[i], slots[i].wall});
  out.finish(detail::seconds_since(t0));
  return out.manifest;
}

struct RankSweepRow {
  int r = 0;
  std::uint64_t seed = 0;
  double mean_err_db = 0.0;
};

struct RankSweepResult {
  std::vector<RankSweepRow> runs;  // r-major
  std::vector<std::pair<int, double>> aggregate;  // (r, across-seed mean)

  int argmin() const {
    auto it = std::min_element(aggregate.begin(), aggregate.end(),
                               [](const auto& a, const auto& b) { return a.second < b.second; });
    return it == aggregate.end() ? 0 : it->first;
  }
};

inline std::vector<int> resolve_r_list(const ExperimentConfig& cfg, int K) {
  if (!cfg.run.r_list.empty()) return cfg.run.r_list;
  std::vector<int> rs;
  for (int r = 1; r <= std::min(20, K); ++r) rs.push_back(r);
  return rs;
}

/// Core of `sweep-rank` without any file output.
inline RankSweepResult rank_sweep(const ExperimentConfig& cfg, const ChannelTrajectory* cir = nullptr) {
  const auto rs = resolve_r_list(cfg, cir ? static_cast<int>(cir->taps()) : cfg.sim.K);
  const auto& seeds = cfg.run.seeds;
  std::vector<std::optional<ObservationSequence>> obs(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t i) { obs[i] = make_observations(cfg, seeds[i], cir); });

  RankSweepResult out;
  out.runs.resize(rs.size() * seeds.size());
  parallel_for(out.runs.size(), [&](std::size_t job) {
    const std::size_t ri = job / seeds.size(), si = job % seeds.size();
    TrackerConfig tc = cfg.tracker;
    tc.r = rs[ri];
    tc.keep_channel = false;
    const auto res = run_algorithm(cfg.run.sweep_algo, *obs[si], tc);
    out.runs[job] = {rs[ri], seeds[si], res.error.mean_db};
  });
  for (std::size_t ri = 0; ri < rs.size(); ++ri) {
    double acc = 0.0;
    for (std::size_t si = 0; si < seeds.size(); ++si) acc += out.runs[ri * seeds.size() + si].mean_err_db;
    out.aggregate.emplace_back(rs[ri], acc / static_cast<double>(seeds.size()));
  }
  return out;
}

/// `sweep-rank`: rank_sweep.csv with one row per (r, seed) and an aggregate
/// row per r whose seed column reads "mean".
inline RunManifest sweep_rank(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto t0 = detail::Clock::now();
  const auto cir = detail::load_cir(cfg);
  const auto res = rank_sweep(cfg, cir ? &*cir : nullptr);

  OutputDir out(cfg.run.out_dir);
  detail::begin_manifest(out, cfg, "sweep-rank");
  CsvWriter w({"algo", "r", "seed", "mean_err_db"});
  for (const auto& row : res.runs) w.field(cfg.run.sweep_algo).field(row.r).field(row.seed).field(row.mean_err_db).end_row();
  for (const auto& [r, m] : res.aggregate) w.field(cfg.run.sweep_algo).field(r).field("mean").field(m).end_row();
  out.write("rank_sweep.csv", w.str());
  out.finish(detail::seconds_since(t0));
  return out.manifest;
}

namespace detail {

inline RunManifest training_command(const ExperimentConfig& cfg, const std::string& name, bool coherence,
                                    bool spectrum) {
  validate(cfg);
  const auto t0 = Clock::now();
  const auto cir = load_cir(cfg);
  const auto& seeds = cfg.run.seeds;
  std::vector<TrainingAnalysis> an(seeds.size());
  std::vector<double> wall(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t i) {
    const auto ts = Clock::now();
    an[i] = analyse_training(make_observations(cfg, seeds[i], cir ? &*cir : nullptr), cfg.tracker);
    wall[i] = seconds_since(ts);
  });
  OutputDir out(cfg.run.out_dir);
  begin_manifest(out, cfg, name);
  write_analysis(out, seeds, an, coherence, spectrum);
  for (std::size_t i = 0; i < seeds.size(); ++i) out.manifest.runs.push_back({seeds[i], wall[i]});
  out.finish(seconds_since(t0));
  return out.manifest;
}

}  // namespace detail

/// `coherence`: tap and component coherence of the training estimates.
inline RunManifest coherence_analysis(const ExperimentConfig& cfg) {
  return detail::training_command(cfg, "coherence", true, false);
}

/// `spectrum`: normalized eigenvalues of the training covariance.
inline RunManifest spectrum_analysis(const ExperimentConfig& cfg) {
  return detail::training_command(cfg, "spectrum", false, true);
}

}  // namespace subtrack::harness

#endif  // SUBTRACK_HARNESS_RUNNER_HPP_
