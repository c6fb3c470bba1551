#ifndef SUBTRACK_KALMAN_CORE_HPP_
#define SUBTRACK_KALMAN_CORE_HPP_

// Scalar-observation Kalman recursion on the stacked AR state, the recursive
// component autocorrelation used to refresh the transition model, the
// time-reversed (backward) model, and two-filter fusion.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "subtrack/ar_model.hpp"
#include "subtrack/linalg_spectral.hpp"
#include "subtrack/types.hpp"

namespace subtrack {

inline constexpr double kStabilityMargin = 1e-6;
inline constexpr double kSingularCoeff = 1e-12;
inline constexpr double kFusionRidge = 1e-12;

enum class Conditioning { predicted, filtered };

struct KalmanBelief {
  CVector Z;  // [z(n); z(n-1); ...; z(n-p+1)]
  CMatrix K;  // error covariance
  Conditioning tag = Conditioning::predicted;
};

/// D(n) = [d(n)^T Q_r(n), 0 ... 0] with r(p-1) trailing zeros.
struct ObservationRow {
  Eigen::RowVectorXcd D;
  double noise_var = 0.0;

  static ObservationRow project(const CVector& d, const CMatrix& Q, int p, double noise_var) {
    ObservationRow row;
    row.D = Eigen::RowVectorXcd::Zero(Q.cols() * p);
    row.D.head(Q.cols()) = d.transpose() * Q;
    row.noise_var = noise_var;
    return row;
  }
};

struct UpdateOutput {
  KalmanBelief belief;
  cplx xi{0.0, 0.0};  // innovation
  double g = 0.0;     // innovation variance
  CVector gain;
};

/// Measurement update:
///   g = D K D^H + s2,  G = K D^H / g,  xi = r - D Z,
///   Z+ = Z + G xi,     K+ = K - G D K (symmetrized).
inline UpdateOutput kf_update(const KalmanBelief& pred, const ObservationRow& obs, cplx r_n) {
  constexpr const char* where = "kalman_core::kf_update";
  if (!(obs.noise_var > 0.0) || !std::isfinite(obs.noise_var))
    throw InvalidInput(where, "observation noise variance must be finite and > 0");
  if (obs.D.size() != pred.Z.size() || pred.K.rows() != pred.Z.size())
    throw InvalidInput(where, "dimension mismatch between belief and observation row");
  if (!std::isfinite(r_n.real()) || !std::isfinite(r_n.imag()))
    throw NumericError(where, "non-finite observation");

  UpdateOutput out;
  const CVector KDh = pred.K * obs.D.adjoint();
  out.g = (obs.D * KDh).value().real() + obs.noise_var;
  out.gain = KDh / out.g;
  out.xi = r_n - (obs.D * pred.Z).value();
  out.belief.Z = pred.Z + out.gain * out.xi;
  // K - G D K = K - (K D^H)(K D^H)^H / g for Hermitian K.
  out.belief.K = pred.K - (KDh * KDh.adjoint()) / out.g;
  out.belief.K = detail::symmetrize(out.belief.K);
  out.belief.tag = Conditioning::filtered;
  if (!std::isfinite(out.g) || !detail::all_finite(out.belief.Z))
    throw NumericError(where, "update produced non-finite state");
  return out;
}

/// Time update with an explicit transition F and process covariance Qn.
inline KalmanBelief kf_predict(const KalmanBelief& filt, const CMatrix& F, const CMatrix& Qn) {
  KalmanBelief out;
  out.Z = F * filt.Z;
  out.K = F * filt.K * F.adjoint() + Qn;
  out.K = detail::symmetrize(out.K);
  out.tag = Conditioning::predicted;
  return out;
}

/// Z(n+1,n) = Phi_z Z(n,n),  K(n+1,n) = Phi_z K(n,n) Phi_z^H + R_eta_star.
inline KalmanBelief kf_predict(const KalmanBelief& filt, const ArTransitionModel& model) {
  return kf_predict(filt, model.companion(), model.R_eta_star());
}

/// Running estimate of R_i(m, n) for m = 0..p with the lag history needed by
/// the recurrence
///   R(m, n+1) = n/(n+1) R(m, n) + 1/(n+1) z(n+1) conj(z(n+1-m)).
class AutocorrRecursion {
public:
  AutocorrRecursion(int r, int p) : table_(CMatrix::Zero(r, p + 1)), history_(p, CVector::Zero(r)) {}

  /// Start from a batch table computed over `count` samples; `recent` holds
  /// the most recent samples, newest first.
  AutocorrRecursion(const CMatrix& table, std::uint64_t count, const std::vector<CVector>& recent)
      : table_(table), count_(count), history_(table.cols() - 1, CVector::Zero(table.rows())) {
    for (std::size_t m = 0; m < history_.size() && m < recent.size(); ++m) history_[m] = recent[m];
  }

  /// Records z without changing the table.
  void push_history(const CVector& z) {
    if (history_.empty()) return;
    history_.pop_back();
    history_.insert(history_.begin(), z);
  }

  void update(const CVector& z) {
    const double n = static_cast<double>(count_);
    const double w_old = n / (n + 1.0), w_new = 1.0 / (n + 1.0);
    const auto p = static_cast<Eigen::Index>(history_.size());
    for (Eigen::Index i = 0; i < table_.rows(); ++i) {
      table_(i, 0) = w_old * table_(i, 0) + w_new * std::norm(z(i));
      for (Eigen::Index m = 1; m <= p; ++m)
        table_(i, m) = w_old * table_(i, m) + w_new * z(i) * std::conj(history_[m - 1](i));
    }
    ++count_;
    push_history(z);
  }

  const CMatrix& table() const { return table_; }
  std::uint64_t count() const { return count_; }

private:
  CMatrix table_;
  std::uint64_t count_ = 0;
  std::vector<CVector> history_;  // history_[m-1] = z(n+1-m) relative to the next sample
};

/// Free-function form of one recursion step.
inline CMatrix update_autocorr_recursive(AutocorrRecursion& rec, const CVector& z_next) {
  rec.update(z_next);
  return rec.table();
}

struct TransitionPrediction {
  ArTransitionModel model;
  std::vector<int> degenerate_taps;  // taps that kept the previous model
  std::vector<int> clamped_taps;
};

/// Per-component Yule-Walker on the time-indexed table. Coefficients with
/// |phi| >= 1 are pulled radially to 1 - 1e-6. R_eta is carried over from
/// `previous`, as are the coefficients of any tap whose R(0) is not positive.
inline TransitionPrediction predict_transition(const CMatrix& table, const ArTransitionModel& previous) {
  const int p = previous.p, r = previous.r;
  if (table.rows() != r || table.cols() < p + 1)
    throw InvalidInput("kalman_core::predict_transition", "table shape does not match model");
  TransitionPrediction out;
  out.model = previous;
  std::vector<cplx> lags(p + 1);
  for (int i = 0; i < r; ++i) {
    if (!(table(i, 0).real() > 0.0)) {
      out.degenerate_taps.push_back(i);
      continue;
    }
    for (int m = 0; m <= p; ++m) lags[m] = table(i, m);
    const auto sol = solve_yule_walker(lags, p);
    bool clamped = false;
    for (int l = 0; l < p; ++l) {
      cplx phi = sol.phi(l);
      const double mag = std::abs(phi);
      if (mag >= 1.0) {
        phi *= (1.0 - kStabilityMargin) / mag;
        clamped = true;
      }
      out.model.coeffs[l](i) = phi;
    }
    if (clamped) out.clamped_taps.push_back(i);
  }
  return out;
}

/// Time-reversed model Z(n-1) = Phi_b Z(n) + eta_b.
struct BackwardModel {
  CMatrix Phi_b;
  CMatrix R_eta_b;
};

inline BackwardModel backward_model(const ArTransitionModel& model) {
  const auto& last = model.coeffs[model.p - 1];
  for (int i = 0; i < model.r; ++i)
    if (!(std::abs(last(i)) > kSingularCoeff))
      throw SingularModel("kalman_core::backward_model",
                          "transition block " + std::to_string(model.p) + " is singular at tap " +
                              std::to_string(i));
  BackwardModel b;
  if (model.p == 1) {
    b.Phi_b = last.cwiseInverse().asDiagonal();
    b.R_eta_b = b.Phi_b * model.R_eta * b.Phi_b.adjoint();
  } else {
    b.Phi_b = model.companion().partialPivLu().inverse();
    b.R_eta_b = b.Phi_b * model.R_eta_star() * b.Phi_b.adjoint();
  }
  b.R_eta_b = psd_floor(b.R_eta_b, kFusionRidge);
  return b;
}

struct SmoothedState {
  CVector Z;
  CMatrix M;
};

namespace detail {

/// Inverse of a Hermitian PSD matrix; adds a 1e-12 * trace ridge when the
/// Cholesky factorization fails. `ridged` reports whether that happened.
inline CMatrix hermitian_inverse(const CMatrix& A, bool& ridged) {
  const auto n = A.rows();
  ridged = false;
  Eigen::LLT<CMatrix> llt(A);
  if (llt.info() == Eigen::Success) {
    CMatrix inv = llt.solve(CMatrix::Identity(n, n));
    if (all_finite(inv)) return symmetrize(inv);
  }
  ridged = true;
  const double tr = std::max(A.trace().real(), 1e-300);
  CMatrix B = A;
  B.diagonal().array() += cplx(kFusionRidge * tr, 0.0);
  Eigen::LLT<CMatrix> llt2(B);
  if (llt2.info() != Eigen::Success) return CMatrix();
  return symmetrize(llt2.solve(CMatrix::Identity(n, n)));
}

}  // namespace detail

/// M = (K^-1 + K_b^-1)^-1,  Z = M (K^-1 Z_f + K_b^-1 Z_b).
inline SmoothedState fb_combine(const KalmanBelief& fwd, const KalmanBelief& bwd) {
  constexpr const char* where = "kalman_core::fb_combine";
  if (fwd.Z.size() != bwd.Z.size() || fwd.K.rows() != bwd.K.rows())
    throw InvalidInput(where, "forward and backward beliefs differ in dimension");
  bool rf = false, rb = false;
  const CMatrix Kf_inv = detail::hermitian_inverse(fwd.K, rf);
  const CMatrix Kb_inv = detail::hermitian_inverse(bwd.K, rb);
  if ((rf && rb) || Kf_inv.size() == 0 || Kb_inv.size() == 0)
    throw FusionError(where, "forward and backward covariances are both singular");
  bool rm = false;
  SmoothedState out;
  out.M = detail::hermitian_inverse(Kf_inv + Kb_inv, rm);
  if (out.M.size() == 0) throw FusionError(where, "combined information matrix is singular");
  out.Z = out.M * (Kf_inv * fwd.Z + Kb_inv * bwd.Z);
  return out;
}

}  // namespace subtrack

#endif  // SUBTRACK_KALMAN_CORE_HPP_
