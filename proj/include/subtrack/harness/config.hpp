#ifndef SUBTRACK_HARNESS_CONFIG_HPP_
#define SUBTRACK_HARNESS_CONFIG_HPP_

// Experiment configuration: flat INI with [sim], [tracker] and [run]
// sections, addressed as sim.K, tracker.r, run.algos, ... Every key must be
// known; `--override key=value` pairs are applied after the file.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "subtrack/channel_sim.hpp"
#include "subtrack/tracker_pipeline.hpp"

namespace subtrack::harness {

/// Anything wrong with the configuration (maps to exit code 2).
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class Generator { latent, physical, cir };

inline std::string to_string(Generator g) {
  switch (g) {
    case Generator::latent: return "latent";
    case Generator::physical: return "physical";
    case Generator::cir: return "cir";
  }
  return "?";
}

enum class NoiseSource { simulator, estimate, fixed };

struct RunConfig {
  std::vector<std::string> algos{"lms", "asrmae", "dfb_asrmae"};
  std::vector<std::uint64_t> seeds{1};
  std::string out_dir = "out";
  std::vector<int> r_list;  // sweep-rank; empty means 1..20
  std::string sweep_algo = "dfb_asrmae";
  bool emit_errors = true;
  bool emit_phi = true;
  bool emit_coherence = true;
  bool emit_spectrum = true;
};

struct ExperimentConfig {
  SimConfig sim;
  TrackerConfig tracker = TrackerConfig{}.with_enhancements(true);  // flags drive dfb_asrmae
  RunConfig run;
  Generator generator = Generator::latent;
  int physical_paths = 6;
  double pulse_rolloff = 0.25;
  std::string cir_file;
  NoiseSource noise = NoiseSource::simulator;

  // Resolved key=value snapshot, for the manifest.
  std::map<std::string, std::string> snapshot() const;
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

inline long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
}

inline int parse_small_int(const std::string& key, const std::string& v) {
  const long long x = parse_int(key, v);
  if (x < -1000000000LL || x > 1000000000LL) throw ConfigError(key + ": value out of range");
  return static_cast<int>(x);
}

inline bool parse_bool(const std::string& key, std::string v) {
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

/// "1-5,8" -> 1 2 3 4 5 8
inline std::vector<long long> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<long long> out;
  for (const auto& item : split(v, ',')) {
    const auto dash = item.find('-', 1);
    if (dash == std::string::npos) {
      out.push_back(parse_int(key, item));
      continue;
    }
    const long long lo = parse_int(key, trim(item.substr(0, dash)));
    const long long hi = parse_int(key, trim(item.substr(dash + 1)));
    if (hi < lo || hi - lo > 1000000) throw ConfigError(key + ": bad range '" + item + "'");
    for (long long x = lo; x <= hi; ++x) out.push_back(x);
  }
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

inline const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    // sim.*
    t["sim.generator"] = [](ExperimentConfig& c, const std::string& v) {
      if (v == "latent") c.generator = Generator::latent;
      else if (v == "physical") c.generator = Generator::physical;
      else if (v == "cir") c.generator = Generator::cir;
      else throw ConfigError("sim.generator: expected latent|physical|cir, got '" + v + "'");
    };
    t["sim.preset"] = [](ExperimentConfig& c, const std::string& v) {
      if (v == "calm") c.sim.apply_preset(Preset::calm);
      else if (v == "rough") c.sim.apply_preset(Preset::rough);
      else throw ConfigError("sim.preset: expected calm|rough, got '" + v + "'");
    };
    t["sim.K"] = [](ExperimentConfig& c, const std::string& v) { c.sim.K = parse_small_int("sim.K", v); };
    t["sim.N"] = [](ExperimentConfig& c, const std::string& v) { c.sim.N = parse_small_int("sim.N", v); };
    t["sim.r_true"] = [](ExperimentConfig& c, const std::string& v) {
      c.sim.r_true = parse_small_int("sim.r_true", v);
    };
    t["sim.snr_db"] = [](ExperimentConfig& c, const std::string& v) { c.sim.snr_db = parse_double("sim.snr_db", v); };
    t["sim.phi_lo"] = [](ExperimentConfig& c, const std::string& v) { c.sim.phi_lo = parse_double("sim.phi_lo", v); };
    t["sim.phi_hi"] = [](ExperimentConfig& c, const std::string& v) { c.sim.phi_hi = parse_double("sim.phi_hi", v); };
    t["sim.omega_q"] = [](ExperimentConfig& c, const std::string& v) {
      c.sim.omega_q = parse_double("sim.omega_q", v);
    };
    t["sim.phi_drift"] = [](ExperimentConfig& c, const std::string& v) {
      c.sim.phi_drift = parse_double("sim.phi_drift", v);
    };
    t["sim.power_spread_db"] = [](ExperimentConfig& c, const std::string& v) {
      c.sim.power_spread_db = parse_double("sim.power_spread_db", v);
    };
    t["sim.pulse_span"] = [](ExperimentConfig& c, const std::string& v) {
      c.sim.pulse_span = parse_small_int("sim.pulse_span", v);
    };
    t["sim.pulse_rolloff"] = [](ExperimentConfig& c, const std::string& v) {
      c.pulse_rolloff = parse_double("sim.pulse_rolloff", v);
    };
    t["sim.paths"] = [](ExperimentConfig& c, const std::string& v) {
      c.physical_paths = parse_small_int("sim.paths", v);
    };
    t["sim.T_b"] = [](ExperimentConfig& c, const std::string& v) { c.sim.T_b = parse_double("sim.T_b", v); };
    t["sim.T_g"] = [](ExperimentConfig& c, const std::string& v) { c.sim.T_g = parse_double("sim.T_g", v); };
    t["sim.cir_file"] = [](ExperimentConfig& c, const std::string& v) { c.cir_file = v; };
    // tracker.*
    t["tracker.p"] = [](ExperimentConfig& c, const std::string& v) { c.tracker.p = parse_small_int("tracker.p", v); };
    t["tracker.r"] = [](ExperimentConfig& c, const std::string& v) { c.tracker.r = parse_small_int("tracker.r", v); };
    t["tracker.mu"] = [](ExperimentConfig& c, const std::string& v) { c.tracker.mu = parse_double("tracker.mu", v); };
    t["tracker.beta"] = [](ExperimentConfig& c, const std::string& v) {
      c.tracker.beta = parse_double("tracker.beta", v);
    };
    t["tracker.orth_period"] = [](ExperimentConfig& c, const std::string& v) {
      c.tracker.orth_period = parse_small_int("tracker.orth_period", v);
    };
    t["tracker.N_p"] = [](ExperimentConfig& c, const std::string& v) {
      c.tracker.N_p = parse_small_int("tracker.N_p", v);
    };
    t["tracker.noise_var"] = [](ExperimentConfig& c, const std::string& v) {
      if (v == "sim") {
        c.noise = NoiseSource::simulator;
        c.tracker.noise_var.reset();
        c.tracker.estimate_noise = false;
      } else if (v == "estimate") {
        c.noise = NoiseSource::estimate;
        c.tracker.noise_var.reset();
        c.tracker.estimate_noise = true;
      } else {
        c.noise = NoiseSource::fixed;
        c.tracker.noise_var = parse_double("tracker.noise_var", v);
        c.tracker.estimate_noise = false;
      }
    };
    t["tracker.db_floor"] = [](ExperimentConfig& c, const std::string& v) {
      c.tracker.db_floor = parse_double("tracker.db_floor", v);
    };
    t["tracker.backward_prior_var"] = [](ExperimentConfig& c, const std::string& v) {
      c.tracker.backward_prior_var = parse_double("tracker.backward_prior_var", v);
    };
    t["tracker.dynamic_phi"] = [](ExperimentConfig& c, const std::string& v) {
      c.tracker.dynamic_phi = parse_bool("tracker.dynamic_phi", v);
    };
    t["tracker.correlated_noise"] = [](ExperimentConfig& c, const std::string& v) {
      c.tracker.correlated_noise = parse_bool("tracker.correlated_noise", v);
    };
    t["tracker.fb_smoothing"] = [](ExperimentConfig& c, const std::string& v) {
      c.tracker.fb_smoothing = parse_bool("tracker.fb_smoothing", v);
    };
    // run.*
    t["run.algos"] = [](ExperimentConfig& c, const std::string& v) {
      c.run.algos = split(v, ',');
      if (c.run.algos.empty()) throw ConfigError("run.algos: empty list");
    };
    t["run.seeds"] = [](ExperimentConfig& c, const std::string& v) {
      // A bare count N means seeds 1..N; anything else is an explicit list.
      std::vector<long long> xs;
      if (v.find_first_of(",-") == std::string::npos) {
        const long long n = parse_int("run.seeds", trim(v));
        if (n < 1 || n > 100000) throw ConfigError("run.seeds: count must lie in [1, 100000]");
        for (long long s = 1; s <= n; ++s) xs.push_back(s);
      } else {
        xs = parse_int_list("run.seeds", v);
      }
      c.run.seeds.clear();
      for (long long s : xs) {
        if (s < 0) throw ConfigError("run.seeds: seeds must be >= 0");
        c.run.seeds.push_back(static_cast<std::uint64_t>(s));
      }
    };
    t["run.seed"] = [](ExperimentConfig& c, const std::string& v) {
      const long long s = parse_int("run.seed", v);
      if (s < 0) throw ConfigError("run.seed: must be >= 0");
      c.run.seeds = {static_cast<std::uint64_t>(s)};
    };
    t["run.out"] = [](ExperimentConfig& c, const std::string& v) { c.run.out_dir = v; };
    t["run.r_list"] = [](ExperimentConfig& c, const std::string& v) {
      c.run.r_list.clear();
      for (long long r : parse_int_list("run.r_list", v)) {
        if (r < -1000000 || r > 1000000) throw ConfigError("run.r_list: value out of range");
        c.run.r_list.push_back(static_cast<int>(r));
      }
    };
    t["run.sweep_algo"] = [](ExperimentConfig& c, const std::string& v) { c.run.sweep_algo = v; };
    t["run.emit_errors"] = [](ExperimentConfig& c, const std::string& v) {
      c.run.emit_errors = parse_bool("run.emit_errors", v);
    };
    t["run.emit_phi"] = [](ExperimentConfig& c, const std::string& v) {
      c.run.emit_phi = parse_bool("run.emit_phi", v);
    };
    t["run.emit_coherence"] = [](ExperimentConfig& c, const std::string& v) {
      c.run.emit_coherence = parse_bool("run.emit_coherence", v);
    };
    t["run.emit_spectrum"] = [](ExperimentConfig& c, const std::string& v) {
      c.run.emit_spectrum = parse_bool("run.emit_spectrum", v);
    };
    return t;
  }();
  return table;
}

}  // namespace detail

inline std::vector<std::string> known_keys() {
  std::vector<std::string> out;
  for (const auto& [k, _] : detail::setters()) out.push_back(k);
  return out;
}

inline const std::vector<std::string>& known_algorithms() {
  static const std::vector<std::string> a{"lms", "asrmae", "dfb_asrmae"};
  return a;
}

/// Ordered key=value assignments, as read from a file or the command line.
using Assignments = std::vector<std::pair<std::string, std::string>>;

inline Assignments read_ini(std::istream& in, const std::string& name = "<config>") {
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::ini_parser::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(name + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  Assignments out;
  for (const auto& [section, body] : pt) {
    if (body.empty()) {
      if (!body.data().empty()) throw ConfigError(name + ": key '" + section + "' outside a [section]");
      continue;  // empty section
    }
    for (const auto& [key, val] : body) {
      if (!val.empty()) throw ConfigError(name + ": nested key under " + section + "." + key);
      out.emplace_back(section + "." + key, detail::trim(val.data()));
    }
  }
  return out;
}

inline Assignments read_ini_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return read_ini(in, path);
}

inline std::pair<std::string, std::string> parse_override(const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + kv + "' is not key=value");
  return {detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1))};
}

/// Applies assignments in order, except that sim.preset is applied first so
/// explicit sim.omega_q / sim.phi_drift win regardless of position.
inline void apply_assignments(ExperimentConfig& cfg, const Assignments& kvs) {
  const auto& table = detail::setters();
  for (const auto& [k, v] : kvs)
    if (!table.count(k)) throw ConfigError("unknown config key '" + k + "'");
  for (const auto& [k, v] : kvs)
    if (k == "sim.preset") table.at(k)(cfg, v);
  for (const auto& [k, v] : kvs)
    if (k != "sim.preset") table.at(k)(cfg, v);
}

/// Checks everything a run needs before any work starts.
inline void validate(const ExperimentConfig& cfg) {
  for (const auto& a : cfg.run.algos)
    if (std::find(known_algorithms().begin(), known_algorithms().end(), a) == known_algorithms().end())
      throw ConfigError("run.algos: unknown algorithm '" + a + "'");
  if (std::find(known_algorithms().begin(), known_algorithms().end(), cfg.run.sweep_algo) ==
          known_algorithms().end() ||
      cfg.run.sweep_algo == "lms")
    throw ConfigError("run.sweep_algo: expected asrmae or dfb_asrmae");
  if (cfg.run.seeds.empty()) throw ConfigError("run.seeds: no seeds");
  if (cfg.run.out_dir.empty()) throw ConfigError("run.out: empty path");
  if (cfg.generator == Generator::cir && cfg.cir_file.empty())
    throw ConfigError("sim.generator = cir requires sim.cir_file");
  if (cfg.generator == Generator::physical && cfg.physical_paths < 1)
    throw ConfigError("sim.paths must be >= 1");
  if (!(cfg.pulse_rolloff >= 0.0 && cfg.pulse_rolloff <= 1.0))
    throw ConfigError("sim.pulse_rolloff must lie in [0, 1]");
  try {
    SimConfig sim = cfg.sim;
    sim.N_p = cfg.tracker.N_p;
    if (cfg.generator != Generator::cir) sim.validate();
    if (cfg.generator != Generator::cir) cfg.tracker.validate(sim.K, sim.N);
    for (int r : cfg.run.r_list)
      if (r < 1 || (cfg.generator != Generator::cir && r > sim.K))
        throw InvalidInput("run.r_list", "rank " + std::to_string(r) + " outside [1, K = " +
                                              std::to_string(sim.K) + "]");
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

inline ExperimentConfig load_config(const std::string& path, const Assignments& overrides) {
  ExperimentConfig cfg;
  Assignments all;
  if (!path.empty()) all = read_ini_file(path);
  apply_assignments(cfg, all);
  apply_assignments(cfg, overrides);
  cfg.sim.N_p = cfg.tracker.N_p;
  return cfg;
}

inline std::map<std::string, std::string> ExperimentConfig::snapshot() const {
  using detail::fmt_double;
  std::map<std::string, std::string> m;
  m["sim.generator"] = to_string(generator);
  m["sim.preset"] = subtrack::to_string(sim.preset);
  m["sim.K"] = std::to_string(sim.K);
  m["sim.N"] = std::to_string(sim.N);
  m["sim.r_true"] = std::to_string(sim.r_true);
  m["sim.snr_db"] = fmt_double(sim.snr_db);
  m["sim.phi_lo"] = fmt_double(sim.phi_lo);
  m["sim.phi_hi"] = fmt_double(sim.phi_hi);
  m["sim.omega_q"] = fmt_double(sim.omega_q);
  m["sim.phi_drift"] = fmt_double(sim.phi_drift);
  m["sim.power_spread_db"] = fmt_double(sim.power_spread_db);
  m["sim.pulse_span"] = std::to_string(sim.pulse_span);
  m["sim.pulse_rolloff"] = fmt_double(pulse_rolloff);
  m["sim.paths"] = std::to_string(physical_paths);
  m["sim.T_b"] = fmt_double(sim.T_b);
  m["sim.T_g"] = fmt_double(sim.T_g);
  m["sim.cir_file"] = cir_file;
  m["tracker.p"] = std::to_string(tracker.p);
  m["tracker.r"] = std::to_string(tracker.r);
  m["tracker.mu"] = fmt_double(tracker.mu);
  m["tracker.beta"] = fmt_double(tracker.beta);
  m["tracker.orth_period"] = std::to_string(tracker.orth_period);
  m["tracker.N_p"] = std::to_string(tracker.N_p);
  m["tracker.noise_var"] = noise == NoiseSource::simulator  ? "sim"
                           : noise == NoiseSource::estimate ? "estimate"
                                                            : fmt_double(tracker.noise_var.value_or(0.0));
  m["tracker.db_floor"] = fmt_double(tracker.db_floor);
  m["tracker.backward_prior_var"] = fmt_double(tracker.backward_prior_var);
  m["tracker.dynamic_phi"] = tracker.dynamic_phi ? "true" : "false";
  m["tracker.correlated_noise"] = tracker.correlated_noise ? "true" : "false";
  m["tracker.fb_smoothing"] = tracker.fb_smoothing ? "true" : "false";
  m["run.algos"] = detail::join(run.algos);
  m["run.seeds"] = detail::join(run.seeds);
  m["run.out"] = run.out_dir;
  m["run.r_list"] = detail::join(run.r_list);
  m["run.sweep_algo"] = run.sweep_algo;
  m["run.emit_errors"] = run.emit_errors ? "true" : "false";
  m["run.emit_phi"] = run.emit_phi ? "true" : "false";
  m["run.emit_coherence"] = run.emit_coherence ? "true" : "false";
  m["run.emit_spectrum"] = run.emit_spectrum ? "true" : "false";
  return m;
}

}  // namespace subtrack::harness

#endif  // SUBTRACK_HARNESS_CONFIG_HPP_
