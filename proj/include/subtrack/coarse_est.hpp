#ifndef SUBTRACK_COARSE_EST_HPP_
#define SUBTRACK_COARSE_EST_HPP_

// Training-phase initialization: LMS coarse channel estimates, their
// covariance and eigen-subspace, component autocorrelations, the initial AR
// model and the process-noise covariance (diagonal and full).

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "subtrack/ar_model.hpp"
#include "subtrack/channel_sim.hpp"
#include "subtrack/linalg_spectral.hpp"
#include "subtrack/types.hpp"

namespace subtrack {

inline constexpr double kDefaultLmsStep = 0.005;
inline constexpr double kNoiseFloorRel = 1e-12;

struct LmsConfig {
  double mu = kDefaultLmsStep;
  CVector initial;  // empty means zero
};

/// Complex LMS for the model r(n) = d(n)^T h(n) + v(n):
///   e(n) = r(n) - d(n)^T h(n),   h(n+1) = h(n) + 2 mu e(n) conj(d(n)).
/// Equivalently the textbook update w += 2 mu conj(e) d on w = conj(h).
class LmsFilter {
public:
  LmsFilter(int K, const LmsConfig& cfg, double data_scale)
      : mu_(cfg.mu), h_(cfg.initial.size() ? cfg.initial : CVector::Zero(K)) {
    if (!(mu_ > 0.0)) throw InvalidInput("coarse_est::lms_track", "step factor mu must be > 0");
    if (h_.size() != K) throw InvalidInput("coarse_est::lms_track", "initial estimate length != K");
    limit_ = 1e6 * std::max({data_scale, h_.norm(), 1e-300});
  }

  /// Returns the a-priori error for this sample and advances the estimate.
  cplx step(const CVector& d, cplx r) {
    const cplx e = r - (d.transpose() * h_).value();
    h_.noalias() += (2.0 * mu_ * e) * d.conjugate();
    const double nrm = h_.norm();
    if (!(nrm <= limit_))
      throw DivergenceError("coarse_est::lms_track",
                            "estimate diverged (|h| = " + std::to_string(nrm) +
                                "); reduce step factor mu = " + std::to_string(mu_));
    return e;
  }

  const CVector& estimate() const { return h_; }

private:
  double mu_;
  CVector h_;
  double limit_ = 0.0;
};

struct LmsTrack {
  CMatrix h;    // row n: estimate after consuming sample n
  CVector err;  // a-priori error e(n)
};

inline double rms(const CVector& v) {
  return v.size() ? std::sqrt(v.squaredNorm() / static_cast<double>(v.size())) : 0.0;
}

inline LmsTrack lms_track(const ObservationSequence& obs, const LmsConfig& cfg) {
  if (static_cast<Eigen::Index>(obs.symbols.size()) < obs.length())
    throw InvalidInput("coarse_est::lms_track", "symbol and observation lengths differ");
  LmsFilter f(obs.K, cfg, rms(obs.r));
  LmsTrack out;
  out.h.resize(obs.length(), obs.K);
  out.err.resize(obs.length());
  for (Eigen::Index n = 0; n < obs.length(); ++n) {
    out.err(n) = f.step(obs.regressor(n), obs.r(n));
    out.h.row(n) = f.estimate().transpose();
  }
  return out;
}

/// (1/N_p) sum_n h(n) h(n)^H over the first N_p rows.
inline CMatrix estimate_channel_covariance(const CMatrix& hseq, Eigen::Index N_p) {
  if (N_p < 1 || N_p > hseq.rows())
    throw InvalidInput("coarse_est::estimate_channel_covariance", "need 1 <= N_p <= rows");
  const auto H = hseq.topRows(N_p);
  CMatrix R = H.transpose() * H.conjugate();
  R /= static_cast<double>(N_p);
  return detail::symmetrize(R);
}

/// z(n) = Q_r^H h(n), row-wise.
inline CMatrix project_components(const CMatrix& hseq, const CMatrix& Q) {
  if (hseq.cols() != Q.rows())
    throw InvalidInput("coarse_est::project_components", "basis rows != taps");
  return hseq * Q.conjugate();
}

/// Table r x (p+1) of R_i(m) = (1/N_p) sum_{n<N_p} z_i(n) conj(z_i(n-m)),
/// with history before the first row taken as zero.
inline CMatrix estimate_component_autocorrelation(const CMatrix& zseq, int p, Eigen::Index N_p) {
  if (p < 0 || N_p <= p || N_p > zseq.rows())
    throw InvalidInput("coarse_est::estimate_component_autocorrelation", "need 0 <= p < N_p <= rows");
  const auto r = zseq.cols();
  CMatrix table = CMatrix::Zero(r, p + 1);
  for (Eigen::Index i = 0; i < r; ++i)
    for (int m = 0; m <= p; ++m) {
      cplx acc{0.0, 0.0};
      for (Eigen::Index n = m; n < N_p; ++n) acc += zseq(n, i) * std::conj(zseq(n - m, i));
      table(i, m) = acc / static_cast<double>(N_p);
    }
  return table;
}

struct InitialModel {
  ArTransitionModel model;  // R_eta holds the diagonal estimate
  std::vector<YuleWalkerSolution> per_tap;
};

/// Per-component Yule-Walker solves assembled into the companion model, with
/// R_eta = diag(R_eta_1 .. R_eta_r).
inline InitialModel build_initial_model(const CMatrix& table, int p) {
  if (table.cols() < p + 1)
    throw InvalidInput("coarse_est::build_initial_model", "autocorrelation table lacks lags 0..p");
  const int r = static_cast<int>(table.rows());
  InitialModel out;
  out.model = ArTransitionModel::zeros(p, r);
  for (int i = 0; i < r; ++i) {
    std::vector<cplx> lags(p + 1);
    for (int m = 0; m <= p; ++m) lags[m] = table(i, m);
    auto sol = solve_yule_walker(lags, p);
    for (int l = 0; l < p; ++l) out.model.coeffs[l](i) = sol.phi(l);
    out.model.R_eta(i, i) = sol.innovation_var;
    out.per_tap.push_back(std::move(sol));
  }
  return out;
}

/// eta(n) = z(n) - sum_l Phi(l) z(n-l) for n = p..N_p-1 (0-based), then
/// R = (1/N_p) sum eta eta^H, symmetrized and eigenvalue-floored at
/// 1e-12 * trace.
inline CMatrix estimate_process_noise_correlated(const CMatrix& zseq, const ArTransitionModel& model,
                                                 Eigen::Index N_p) {
  const int p = model.p;
  if (N_p <= p || N_p > zseq.rows() || zseq.cols() != model.r)
    throw InvalidInput("coarse_est::estimate_process_noise_correlated",
                       "need p < N_p <= rows and matching rank");
  const auto r = zseq.cols();
  CMatrix R = CMatrix::Zero(r, r);
  CVector eta(r);
  for (Eigen::Index n = p; n < N_p; ++n) {
    eta = zseq.row(n).transpose();
    for (int l = 1; l <= p; ++l)
      eta -= model.coeffs[l - 1].cwiseProduct(zseq.row(n - l).transpose());
    R.noalias() += eta * eta.adjoint();
  }
  R /= static_cast<double>(N_p);
  return psd_floor(R, kNoiseFloorRel);
}

/// Everything the trackers need from the training prefix.
struct CoarseModel {
  CMatrix R_h;
  EigenDecomposition evd;
  SubspaceBasis basis;
  CMatrix z_lms;  // N_p x r
  CMatrix autocorr;
  ArTransitionModel initial;  // R_eta = diagonal estimate
  CMatrix R_eta_diag;
  CMatrix R_eta_full;
};

inline CoarseModel fit_coarse_model(const CMatrix& h_lms, Eigen::Index N_p, int r, int p) {
  CoarseModel cm;
  cm.R_h = estimate_channel_covariance(h_lms, N_p);
  cm.evd = evd_hermitian(cm.R_h);
  cm.basis = truncate_subspace(cm.evd, r);
  cm.z_lms = project_components(h_lms.topRows(N_p), cm.basis.Q);
  cm.autocorr = estimate_component_autocorrelation(cm.z_lms, p, N_p);
  auto init = build_initial_model(cm.autocorr, p);
  cm.initial = std::move(init.model);
  cm.R_eta_diag = cm.initial.R_eta;
  cm.R_eta_full = estimate_process_noise_correlated(cm.z_lms, cm.initial, N_p);
  return cm;
}

}  // namespace subtrack

#endif  // SUBTRACK_COARSE_EST_HPP_
