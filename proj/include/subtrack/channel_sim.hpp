#ifndef SUBTRACK_CHANNEL_SIM_HPP_
#define SUBTRACK_CHANNEL_SIM_HPP_

// Synthetic correlated time-varying channels with ground truth.
//
// Two generators are provided. The physical one sums pulse-shaped multipath
// arrivals, so off-grid delays leak energy into neighbouring taps. The latent
// one draws AR(1) components and maps them through a slowly rotating
// orthonormal basis, which matches the tracker's own model class.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/QR>

#include "subtrack/types.hpp"

namespace subtrack {

enum class Preset { calm, rough };

inline const char* to_string(Preset p) { return p == Preset::calm ? "calm" : "rough"; }

/// Combined transmit/receive filter sampled once per tap.
struct PulseShape {
  std::vector<cplx> taps;

  int span() const { return static_cast<int>(taps.size()); }

  double energy() const {
    double e = 0.0;
    for (auto t : taps) e += std::norm(t);
    return e;
  }

  /// Bandlimited (sinc) interpolation of the taps; t is in units of T_b.
  cplx evaluate(double t) const {
    cplx acc{0.0, 0.0};
    for (int j = 0; j < span(); ++j) acc += taps[j] * sinc(t - j);
    return acc;
  }

  static double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    const double px = std::numbers::pi * x;
    return std::sin(px) / px;
  }

  static PulseShape unit_impulse() { return PulseShape{{cplx{1.0, 0.0}}}; }

  /// Raised-cosine pulse of `width` taps per symbol lobe, sampled at integer
  /// tap positions and centred in a window of `span` taps. width > 1 models a
  /// filter narrower than the tap rate.
  static PulseShape raised_cosine(int span, double rolloff, double width) {
    PulseShape p;
    const double centre = 0.5 * (span - 1);
    for (int j = 0; j < span; ++j) {
      const double t = (j - centre) / width;
      double v = sinc(t);
      const double denom = 1.0 - 4.0 * rolloff * rolloff * t * t;
      if (std::abs(denom) < 1e-10)
        v = std::numbers::pi / 4.0 * sinc(1.0 / (2.0 * rolloff));
      else
        v *= std::cos(std::numbers::pi * rolloff * t) / denom;
      p.taps.emplace_back(v, 0.0);
    }
    return p;
  }
};

/// Per-path complex amplitude and delay (seconds) trajectories, each length N.
struct PathSet {
  std::vector<std::vector<cplx>> amplitude;
  std::vector<std::vector<double>> delay;

  std::size_t size() const { return amplitude.size(); }
};

/// h is N x K; row n is the CIR at snapshot n.
struct ChannelTrajectory {
  CMatrix h;
  double T_b = 1.0;
  double T_g = 1.0;

  Eigen::Index taps() const { return h.cols(); }
  Eigen::Index length() const { return h.rows(); }
  CVector at(Eigen::Index n) const { return h.row(n).transpose(); }
};

struct SimConfig {
  int K = 64;
  int N = 5000;
  int N_p = 1000;
  int r_true = 12;
  std::uint64_t seed = 1;
  double snr_db = 20.0;
  double phi_lo = 0.998;
  double phi_hi = 0.9995;
  double omega_q = 2e-4;     // basis rotation, rad/step
  double phi_drift = 0.0;    // total linear decrease of phi over N
  double power_spread_db = 10.0;  // strongest-to-weakest component power
  int pulse_span = 8;
  Preset preset = Preset::calm;
  double T_b = 1.0;
  double T_g = 1.0;

  /// Sets omega_q and phi_drift for the named preset.
  void apply_preset(Preset p) {
    preset = p;
    if (p == Preset::rough) {
      omega_q = 2e-3;
      phi_drift = 0.05;
    } else {
      omega_q = 2e-4;
      phi_drift = 0.0;
    }
  }

  void validate() const {
    constexpr const char* where = "channel_sim::SimConfig";
    if (K < 1) throw InvalidInput(where, "K must be >= 1");
    if (!(N_p > 0 && N_p < N)) throw InvalidInput(where, "need 0 < N_p < N");
    if (r_true < 1 || r_true > K) throw InvalidInput(where, "need 1 <= r_true <= K");
    if (!(phi_lo >= 0.0 && phi_lo <= phi_hi && phi_hi < 1.0))
      throw InvalidInput(where, "need 0 <= phi_lo <= phi_hi < 1");
    if (!(phi_drift >= 0.0)) throw InvalidInput(where, "phi_drift must be >= 0");
    if (!(omega_q >= 0.0) || !std::isfinite(omega_q))
      throw InvalidInput(where, "omega_q must be finite and >= 0");
    if (pulse_span < 1) throw InvalidInput(where, "pulse_span must be >= 1");
    if (!std::isfinite(snr_db)) throw InvalidInput(where, "snr_db must be finite");
  }
};

namespace detail {

/// Independent RNG stream for (seed, stream id).
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), 0x5ab7u};
  return std::mt19937_64(seq);
}

/// Circularly-symmetric complex Gaussian with E|x|^2 = var.
inline cplx complex_normal(std::mt19937_64& rng, double var) {
  std::normal_distribution<double> nd(0.0, std::sqrt(0.5 * var));
  const double re = nd(rng);
  const double im = nd(rng);
  return {re, im};
}

enum Stream : std::uint64_t { kChannel = 1, kSymbols = 2, kNoise = 3, kPaths = 4 };

}  // namespace detail

/// Ground truth of the latent generator. The basis at step n is
/// G^n Q0 where G rotates by omega in the plane spanned by (a, b).
struct SimGroundTruth {
  CMatrix Q0;
  CVector plane_a;
  CVector plane_b;
  double omega = 0.0;
  CMatrix z;          // N x r_true
  RMatrix phi;        // N x r_true, AR(1) coefficient used to reach step n
  RMatrix eta_var;    // N x r_true
  RVector power;      // stationary component power
  CMatrix R_eta;      // r_true x r_true at n = 0

  CMatrix basis(Eigen::Index n) const {
    const double ang = omega * static_cast<double>(n);
    const double c = std::cos(ang), s = std::sin(ang);
    const Eigen::RowVectorXcd ta = plane_a.adjoint() * Q0;
    const Eigen::RowVectorXcd tb = plane_b.adjoint() * Q0;
    CMatrix Q = Q0;
    Q += (c - 1.0) * (plane_a * ta + plane_b * tb);
    Q += s * (plane_b * ta - plane_a * tb);
    return Q;
  }
};

/// Fully specified latent model before realization. Exposed so tests can pin
/// coefficients outside the validated config envelope (e.g. phi = 1).
struct LatentModel {
  int K = 0;
  int N = 0;
  CMatrix Q0;
  CVector plane_a;
  CVector plane_b;
  double omega = 0.0;
  RMatrix phi;      // N x r
  RMatrix eta_var;  // N x r
  RVector power;    // initial-state variance per component
  std::uint64_t seed = 0;
};

inline LatentModel make_latent_model(const SimConfig& cfg) {
  cfg.validate();
  auto rng = detail::make_rng(cfg.seed, detail::kChannel);
  const int K = cfg.K, r = cfg.r_true, N = cfg.N;

  LatentModel m;
  m.K = K;
  m.N = N;
  m.seed = cfg.seed;
  m.omega = cfg.omega_q;

  CMatrix G(K, std::max(r, 2));
  for (Eigen::Index j = 0; j < G.cols(); ++j)
    for (Eigen::Index i = 0; i < K; ++i) G(i, j) = detail::complex_normal(rng, 1.0);
  Eigen::HouseholderQR<CMatrix> qr(G.leftCols(r));
  m.Q0 = qr.householderQ() * CMatrix::Identity(K, r);

  // Rotation plane: two random orthonormal directions.
  CMatrix P(K, 2);
  for (Eigen::Index j = 0; j < 2; ++j)
    for (Eigen::Index i = 0; i < K; ++i) P(i, j) = detail::complex_normal(rng, 1.0);
  if (K >= 2) {
    Eigen::HouseholderQR<CMatrix> pqr(P);
    CMatrix Pq = pqr.householderQ() * CMatrix::Identity(K, 2);
    m.plane_a = Pq.col(0);
    m.plane_b = Pq.col(1);
  } else {
    m.plane_a = CVector::Zero(K);
    m.plane_b = CVector::Zero(K);
  }

  std::uniform_real_distribution<double> uphi(cfg.phi_lo, cfg.phi_hi);
  m.power.resize(r);
  m.phi.resize(N, r);
  m.eta_var.resize(N, r);
  for (int i = 0; i < r; ++i) {
    const double frac = r > 1 ? static_cast<double>(i) / (r - 1) : 0.0;
    m.power(i) = std::pow(10.0, -cfg.power_spread_db * frac / 10.0);
    const double phi0 = uphi(rng);
    for (int n = 0; n < N; ++n) {
      const double ph = std::max(0.0, phi0 - cfg.phi_drift * static_cast<double>(n) / N);
      m.phi(n, i) = ph;
      // Keeps the stationary power constant while phi drifts.
      m.eta_var(n, i) = m.power(i) * (1.0 - ph * ph);
    }
  }
  return m;
}

/// Draws z and h for a latent model.
inline std::pair<ChannelTrajectory, SimGroundTruth> realize_latent(const LatentModel& m,
                                                                  double T_b = 1.0,
                                                                  double T_g = 1.0) {
  const int N = m.N, K = m.K;
  const auto r = m.Q0.cols();
  auto rng = detail::make_rng(m.seed, detail::kChannel + 100);

  SimGroundTruth gt;
  gt.Q0 = m.Q0;
  gt.plane_a = m.plane_a;
  gt.plane_b = m.plane_b;
  gt.omega = m.omega;
  gt.phi = m.phi;
  gt.eta_var = m.eta_var;
  gt.power = m.power;
  gt.R_eta = CMatrix::Zero(r, r);
  for (Eigen::Index i = 0; i < r; ++i) gt.R_eta(i, i) = m.eta_var(0, i);
  gt.z.resize(N, r);

  ChannelTrajectory traj;
  traj.T_b = T_b;
  traj.T_g = T_g;
  traj.h.resize(N, K);

  CVector z(r);
  for (Eigen::Index i = 0; i < r; ++i) z(i) = detail::complex_normal(rng, m.power(i));
  for (int n = 0; n < N; ++n) {
    if (n > 0)
      for (Eigen::Index i = 0; i < r; ++i)
        z(i) = m.phi(n, i) * z(i) + detail::complex_normal(rng, m.eta_var(n, i));
    gt.z.row(n) = z.transpose();
    traj.h.row(n) = (gt.basis(n) * z).transpose();
  }
  return {std::move(traj), std::move(gt)};
}

/// h(n) = Q_true(n) z_true(n) with AR(1) components and a rotating basis.
inline std::pair<ChannelTrajectory, SimGroundTruth> synth_latent_channel(const SimConfig& cfg) {
  if (cfg.r_true > cfg.K)
    throw InvalidInput("channel_sim::synth_latent_channel", "r_true exceeds K");
  return realize_latent(make_latent_model(cfg), cfg.T_b, cfg.T_g);
}

/// h_k(n) = sum_m A_m(n) g(k T_b - tau_m(n)).
inline ChannelTrajectory synth_physical_channel(const PathSet& paths, const PulseShape& pulse,
                                                const SimConfig& cfg) {
  constexpr const char* where = "channel_sim::synth_physical_channel";
  if (pulse.taps.empty() || !(pulse.energy() > 0.0) || !std::isfinite(pulse.energy()))
    throw InvalidInput(where, "pulse has no finite nonzero taps");
  if (paths.delay.size() != paths.amplitude.size())
    throw InvalidInput(where, "amplitude/delay path counts differ");

  const int K = cfg.K, N = cfg.N;
  const double max_delay = (K - pulse.span()) * cfg.T_b;
  for (std::size_t m = 0; m < paths.size(); ++m) {
    if (static_cast<int>(paths.amplitude[m].size()) != N ||
        static_cast<int>(paths.delay[m].size()) != N)
      throw InvalidInput(where, "path " + std::to_string(m) + " trajectory length != N");
    for (double tau : paths.delay[m])
      if (!(tau >= 0.0 && tau <= max_delay))
        throw BoundsError(where, "path " + std::to_string(m) + " delay " + std::to_string(tau) +
                                     " outside [0, " + std::to_string(max_delay) + "]");
  }

  ChannelTrajectory traj;
  traj.T_b = cfg.T_b;
  traj.T_g = cfg.T_g;
  traj.h = CMatrix::Zero(N, K);
  for (std::size_t m = 0; m < paths.size(); ++m)
    for (int n = 0; n < N; ++n) {
      const cplx a = paths.amplitude[m][n];
      if (a == cplx{}) continue;
      const double shift = paths.delay[m][n] / cfg.T_b;
      for (int k = 0; k < K; ++k) traj.h(n, k) += a * pulse.evaluate(k - shift);
    }
  return traj;
}

/// Random multipath geometry for the physical generator: Gauss-Markov
/// amplitudes and sinusoidally wandering delays.
inline PathSet random_paths(const SimConfig& cfg, int M, int pulse_span) {
  auto rng = detail::make_rng(cfg.seed, detail::kPaths);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double max_delay = (cfg.K - pulse_span) * cfg.T_b;
  const double wander = cfg.preset == Preset::rough ? 1.5 : 0.3;  // taps
  const double phi = cfg.preset == Preset::rough ? 0.99 : 0.999;

  PathSet ps;
  for (int m = 0; m < M; ++m) {
    const double power = std::pow(10.0, -0.5 * m);
    const double centre = wander + u01(rng) * std::max(0.0, max_delay / cfg.T_b - 2 * wander);
    const double period = 500.0 + 1500.0 * u01(rng);
    const double ph0 = 2.0 * std::numbers::pi * u01(rng);
    std::vector<cplx> amp(cfg.N);
    std::vector<double> del(cfg.N);
    cplx a = detail::complex_normal(rng, power);
    for (int n = 0; n < cfg.N; ++n) {
      if (n > 0) a = phi * a + detail::complex_normal(rng, power * (1.0 - phi * phi));
      amp[n] = a;
      const double d = centre + wander * std::sin(2.0 * std::numbers::pi * n / period + ph0);
      del[n] = std::clamp(d * cfg.T_b, 0.0, max_delay);
    }
    ps.amplitude.push_back(std::move(amp));
    ps.delay.push_back(std::move(del));
  }
  return ps;
}

/// Unit-magnitude QPSK symbols, i.i.d. uniform over the constellation.
inline std::vector<cplx> gen_symbols(int N, std::uint64_t seed) {
  if (N <= 0) throw InvalidInput("channel_sim::gen_symbols", "N must be > 0");
  auto rng = detail::make_rng(seed, detail::kSymbols);
  std::uniform_int_distribution<int> pick(0, 3);
  const double a = std::numbers::sqrt2 / 2.0;
  std::vector<cplx> out(N);
  for (auto& s : out) {
    const int q = pick(rng);
    s = cplx((q & 1) ? -a : a, (q & 2) ? -a : a);
  }
  return out;
}

/// Received samples together with the training symbols that produced them.
struct ObservationSequence {
  CVector r;
  std::vector<cplx> symbols;
  double noise_var = 0.0;
  std::uint64_t seed = 0;
  int K = 0;

  Eigen::Index length() const { return r.size(); }

  /// d(n) = [s(n), s(n-1), ..., s(n-K+1)]^T, zero before the first symbol.
  CVector regressor(Eigen::Index n) const {
    CVector d = CVector::Zero(K);
    for (int k = 0; k < K && n - k >= 0; ++k) d(k) = symbols[n - k];
    return d;
  }
};

/// r(n) = d(n)^T h(n) + v(n).
inline ObservationSequence generate_observations(const ChannelTrajectory& traj,
                                                 const std::vector<cplx>& symbols,
                                                 double noise_var, std::uint64_t seed) {
  constexpr const char* where = "channel_sim::generate_observations";
  if (!(noise_var >= 0.0) || !std::isfinite(noise_var))
    throw InvalidInput(where, "noise variance must be finite and >= 0");
  const auto N = traj.length();
  if (static_cast<Eigen::Index>(symbols.size()) < N)
    throw InvalidInput(where, "symbol sequence shorter than trajectory");

  ObservationSequence obs;
  obs.K = static_cast<int>(traj.taps());
  obs.noise_var = noise_var;
  obs.seed = seed;
  obs.symbols.assign(symbols.begin(), symbols.begin() + N);
  obs.r.resize(N);
  auto rng = detail::make_rng(seed, detail::kNoise);
  for (Eigen::Index n = 0; n < N; ++n) {
    cplx acc{0.0, 0.0};
    for (int k = 0; k < obs.K && n - k >= 0; ++k) acc += obs.symbols[n - k] * traj.h(n, k);
    if (noise_var > 0.0) acc += detail::complex_normal(rng, noise_var);
    obs.r(n) = acc;
  }
  return obs;
}

/// Noise variance that puts mean ||h||^2 (unit-power symbols) at snr_db.
inline double noise_var_for_snr(const ChannelTrajectory& traj, double snr_db) {
  const double mean_power = traj.h.squaredNorm() / std::max<Eigen::Index>(1, traj.length());
  return mean_power / std::pow(10.0, snr_db / 10.0);
}

/// Latent channel, QPSK training and noisy observations for one seed.
struct Scenario {
  ChannelTrajectory traj;
  SimGroundTruth truth;
  ObservationSequence obs;
};

inline Scenario make_latent_scenario(const SimConfig& cfg) {
  auto [traj, truth] = synth_latent_channel(cfg);
  const auto symbols = gen_symbols(cfg.N, cfg.seed);
  const double s2 = noise_var_for_snr(traj, cfg.snr_db);
  auto obs = generate_observations(traj, symbols, s2, cfg.seed);
  return Scenario{std::move(traj), std::move(truth), std::move(obs)};
}

}  // namespace subtrack

#endif  // SUBTRACK_CHANNEL_SIM_HPP_
