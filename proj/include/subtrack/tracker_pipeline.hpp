#ifndef SUBTRACK_TRACKER_PIPELINE_HPP_
#define SUBTRACK_TRACKER_PIPELINE_HPP_

// End-to-end trackers: the LMS reference, the conventional subspace
// tracker (time-invariant AR model, diagonal process noise, forward Kalman
// only) and the dynamic forward-backward tracker. The latter is the same
// loop with three switches turned on:
//   dynamic_phi       refresh the AR coefficients from the running
//                     autocorrelation of the predicted components after
//                     training;
//   correlated_noise  use the full process-noise covariance;
//   fb_smoothing      run a backward filter on the inverted model and fuse.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "subtrack/channel_sim.hpp"
#include "subtrack/coarse_est.hpp"
#include "subtrack/kalman_core.hpp"
#include "subtrack/metrics.hpp"
#include "subtrack/subspace_tracking.hpp"
#include "subtrack/types.hpp"

namespace subtrack {

inline constexpr double kObservationNoiseFloorRel = 1e-10;

struct TrackerConfig {
  int p = 1;
  int r = 12;
  double mu = kDefaultLmsStep;
  double beta = kDefaultForgetting;
  int orth_period = kDefaultOrthPeriod;
  int N_p = 1000;
  std::optional<double> noise_var;  // overrides the simulator value
  bool estimate_noise = false;      // ignore the simulator value and estimate
  bool dynamic_phi = false;
  bool correlated_noise = false;
  bool fb_smoothing = false;
  double db_floor = kDefaultDbFloor;
  double backward_prior_var = 1e3;
  bool keep_channel = true;  // store the N x K tracked CIR

  TrackerConfig with_enhancements(bool on) const {
    TrackerConfig c = *this;
    c.dynamic_phi = c.correlated_noise = c.fb_smoothing = on;
    return c;
  }

  void validate(int K, Eigen::Index N) const {
    constexpr const char* where = "tracker_pipeline::TrackerConfig";
    if (p < 1) throw InvalidInput(where, "p must be >= 1");
    if (r < 1 || r > K)
      throw InvalidInput(where, "r = " + std::to_string(r) + " outside [1, K = " + std::to_string(K) + "]");
    if (!(N_p > 0 && N_p < N)) throw InvalidInput(where, "need 0 < N_p < N");
    if (N_p <= p) throw InvalidInput(where, "training length must exceed p");
    if (!(mu > 0.0)) throw InvalidInput(where, "mu must be > 0");
    if (!(beta > 0.0 && beta <= 1.0)) throw InvalidInput(where, "beta must lie in (0, 1]");
    if (noise_var && !(*noise_var >= 0.0)) throw InvalidInput(where, "noise variance must be >= 0");
    if (!(backward_prior_var > 0.0)) throw InvalidInput(where, "backward prior variance must be > 0");
  }
};

struct TrackResult {
  std::string algo;
  CMatrix h;   // N x K tracked CIR (empty if not kept)
  CVector xi;  // prediction error sequence
  PredictionError error;
  RMatrix abs_phi;  // N x r, |phi_i(n)| of the first coefficient block
  CMatrix R_eta;
  RVector eigen_spectrum;
  double noise_var = 0.0;
  Eigen::Index eval_begin = 0;
  std::size_t clamp_events = 0;
  std::size_t degenerate_events = 0;
  CoarseModel coarse;  // training-phase model (empty for lms)
  CMatrix h_lms_train;  // N_p x K
};

namespace detail {

inline double resolve_noise_var(const ObservationSequence& obs, const TrackerConfig& cfg,
                                const LmsTrack& lms) {
  double s2;
  if (cfg.noise_var) {
    s2 = *cfg.noise_var;
  } else if (!cfg.estimate_noise) {
    s2 = obs.noise_var;
  } else {
    const Eigen::Index lo = 3 * cfg.N_p / 4, hi = cfg.N_p;
    s2 = lms.err.segment(lo, hi - lo).squaredNorm() / static_cast<double>(hi - lo);
  }
  const double ref = obs.r.squaredNorm() / static_cast<double>(obs.length());
  return std::max(s2, kObservationNoiseFloorRel * ref);
}

inline void finish_metrics(TrackResult& res, const ObservationSequence& obs, const TrackerConfig& cfg) {
  res.eval_begin = cfg.N_p;
  res.error = normalized_prediction_error(res.xi, obs.r, cfg.db_floor, cfg.N_p, obs.length());
}

}  // namespace detail

/// Plain LMS; xi(n) is the a-priori error.
inline TrackResult run_lms(const ObservationSequence& obs, const TrackerConfig& cfg) {
  cfg.validate(obs.K, obs.length());
  LmsConfig lc;
  lc.mu = cfg.mu;
  auto lms = lms_track(obs, lc);
  TrackResult res;
  res.algo = "lms";
  res.noise_var = detail::resolve_noise_var(obs, cfg, lms);
  res.xi = lms.err;
  res.h_lms_train = lms.h.topRows(cfg.N_p);
  if (cfg.keep_channel) res.h = std::move(lms.h);
  detail::finish_metrics(res, obs, cfg);
  return res;
}

/// Subspace Kalman tracker; the enhancement switches in `cfg` select between
/// the conventional and the dynamic forward-backward variant.
inline TrackResult run_tracker(const ObservationSequence& obs, const TrackerConfig& cfg) {
  cfg.validate(obs.K, obs.length());
  const Eigen::Index N = obs.length();
  const int K = obs.K, r = cfg.r, p = cfg.p;
  const Eigen::Index Np = cfg.N_p;
  const Eigen::Index dim = static_cast<Eigen::Index>(r) * p;

  TrackResult res;
  if (!cfg.dynamic_phi && !cfg.correlated_noise && !cfg.fb_smoothing)
    res.algo = "asrmae";
  else if (cfg.dynamic_phi && cfg.correlated_noise && cfg.fb_smoothing)
    res.algo = "dfb_asrmae";
  else
    res.algo = "custom";

  // Coarse LMS estimates over the whole record: the training prefix
  // initializes the model, the full run drives the subspace tracker.
  LmsConfig lc;
  lc.mu = cfg.mu;
  const LmsTrack lms = lms_track(obs, lc);
  const double s2 = detail::resolve_noise_var(obs, cfg, lms);
  res.noise_var = s2;
  res.h_lms_train = lms.h.topRows(Np);

  res.coarse = fit_coarse_model(lms.h, Np, r, p);
  const CoarseModel& cm = res.coarse;
  res.eigen_spectrum = eigenvalue_spectrum(cm.R_h);

  ArTransitionModel model = cm.initial;
  model.R_eta = cfg.correlated_noise ? cm.R_eta_full : cm.R_eta_diag;
  res.R_eta = model.R_eta;

  RVector powers = cm.evd.lambda.head(r);
  const double lam_floor = std::max(1e-12 * std::abs(powers(0)), 1e-20);
  powers = powers.cwiseMax(lam_floor);
  PastdTracker pastd(PastdState::from_basis(cm.basis.Q, powers, cfg.beta, cfg.orth_period));

  std::vector<CVector> recent;
  for (Eigen::Index l = 0; l < p; ++l) recent.push_back(cm.z_lms.row(Np - 1 - l).transpose());
  AutocorrRecursion autocorr(cm.autocorr, static_cast<std::uint64_t>(Np), recent);

  double prior = cm.autocorr.col(0).real().mean();
  if (!(prior > 0.0)) prior = 1.0;
  KalmanBelief pred{CVector::Zero(dim), prior * CMatrix::Identity(dim, dim), Conditioning::predicted};

  CMatrix F = model.companion();
  const CMatrix Qn = model.R_eta_star();

  res.xi.resize(N);
  res.abs_phi.resize(N, r);
  if (cfg.keep_channel) res.h.resize(N, K);

  std::vector<KalmanBelief> fwd;
  std::vector<ObservationRow> rows;
  std::vector<ArTransitionModel> models;
  std::vector<CMatrix> bases;
  if (cfg.fb_smoothing) {
    fwd.reserve(N);
    rows.reserve(N);
    models.reserve(N);
    if (cfg.keep_channel) bases.reserve(N);
  }

  for (Eigen::Index n = 0; n < N; ++n) {
    const CMatrix& Q = pastd.step(lms.h.row(n).transpose());
    ObservationRow row = ObservationRow::project(obs.regressor(n), Q, p, s2);
    UpdateOutput upd = kf_update(pred, row, obs.r(n));
    res.xi(n) = upd.xi;
    res.abs_phi.row(n) = model.coeffs[0].cwiseAbs().transpose();
    if (cfg.keep_channel && !cfg.fb_smoothing)
      res.h.row(n) = (Q * upd.belief.Z.head(r)).transpose();

    pred = kf_predict(upd.belief, F, Qn);

    if (cfg.fb_smoothing) {
      fwd.push_back(std::move(upd.belief));
      rows.push_back(std::move(row));
      models.push_back(model);
      if (cfg.keep_channel) bases.push_back(Q);
    }

    if (cfg.dynamic_phi) {
      const CVector z_next = pred.Z.head(r);
      if (n + 1 < Np) {
        autocorr.push_history(z_next);
      } else {
        autocorr.update(z_next);
        auto tp = predict_transition(autocorr.table(), model);
        res.clamp_events += tp.clamped_taps.size();
        res.degenerate_events += tp.degenerate_taps.size();
        model = std::move(tp.model);
        F = model.companion();
      }
    }
  }

  if (cfg.fb_smoothing) {
    KalmanBelief pred_b{CVector::Zero(dim), cfg.backward_prior_var * CMatrix::Identity(dim, dim),
                        Conditioning::predicted};
    std::optional<ArTransitionModel> cached_for;
    BackwardModel bm;
    for (Eigen::Index n = N - 1; n >= 0; --n) {
      const UpdateOutput upd = kf_update(pred_b, rows[n], obs.r(n));
      const SmoothedState sm = fb_combine(fwd[n], upd.belief);
      res.xi(n) = obs.r(n) - (rows[n].D * sm.Z).value();
      if (cfg.keep_channel) res.h.row(n) = (bases[n] * sm.Z.head(r)).transpose();
      if (n > 0) {
        const ArTransitionModel& m = models[n - 1];
        if (!cached_for || !cached_for->same_coefficients(m)) {
          bm = backward_model(m);
          cached_for = m;
        }
        pred_b = kf_predict(upd.belief, bm.Phi_b, bm.R_eta_b);
      }
    }
  }

  detail::finish_metrics(res, obs, cfg);
  return res;
}

/// Conventional tracker: time-invariant model, diagonal noise, forward only.
inline TrackResult run_asrmae(const ObservationSequence& obs, const TrackerConfig& cfg) {
  return run_tracker(obs, cfg.with_enhancements(false));
}

/// Dynamic model, correlated process noise and forward-backward fusion.
inline TrackResult run_dfb_asrmae(const ObservationSequence& obs, const TrackerConfig& cfg) {
  return run_tracker(obs, cfg.with_enhancements(true));
}

}  // namespace subtrack

#endif  // SUBTRACK_TRACKER_PIPELINE_HPP_
