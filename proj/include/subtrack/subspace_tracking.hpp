#ifndef SUBTRACK_SUBSPACE_TRACKING_HPP_
#define SUBTRACK_SUBSPACE_TRACKING_HPP_

// PASTd: deflation-based projection approximation subspace tracking with an
// exponential forgetting window. Each step costs 4Kr complex multiplies.

#include <cstdint>
#include <string>

#include "subtrack/types.hpp"

namespace subtrack {

inline constexpr double kDefaultForgetting = 0.998;
inline constexpr int kDefaultOrthPeriod = 50;
inline constexpr double kPastdStallPower = 1e-30;

struct PastdState {
  CMatrix W;       // K x r, column i is w_i
  RVector lambda;  // exponentially weighted component powers
  double beta = kDefaultForgetting;
  int orth_period = kDefaultOrthPeriod;
  std::uint64_t steps = 0;
#ifdef SUBTRACK_COUNT_OPS
  std::uint64_t multiplies = 0;
#endif

  /// Warm start from an orthonormal basis and its eigenvalues.
  static PastdState from_basis(const CMatrix& Q, const RVector& powers, double beta,
                               int orth_period = kDefaultOrthPeriod) {
    if (!(beta > 0.0 && beta <= 1.0))
      throw InvalidInput("subspace_tracking::PastdState", "forgetting factor must lie in (0, 1]");
    if (powers.size() != Q.cols())
      throw InvalidInput("subspace_tracking::PastdState", "one power per basis vector required");
    PastdState s;
    s.W = Q;
    s.lambda = powers;
    s.beta = beta;
    s.orth_period = orth_period;
    return s;
  }
};

/// Modified Gram-Schmidt on the columns of W, in order.
inline void orthonormalize(CMatrix& W) {
  for (Eigen::Index i = 0; i < W.cols(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      const cplx c = W.col(j).dot(W.col(i));
      W.col(i) -= c * W.col(j);
    }
    const double nrm = W.col(i).norm();
    if (nrm > 0.0) W.col(i) /= nrm;
  }
}

/// One deflation sweep over the r basis vectors driven by input x.
inline void pastd_step(PastdState& s, CVector x) {
  const auto K = s.W.rows();
  const auto r = s.W.cols();
  if (x.size() != K) throw InvalidInput("subspace_tracking::pastd_step", "input length != K");

  for (Eigen::Index i = 0; i < r; ++i) {
    cplx* w = s.W.col(i).data();
    cplx y{0.0, 0.0};
    for (Eigen::Index k = 0; k < K; ++k) y += std::conj(w[k]) * x(k);
    s.lambda(i) = s.beta * s.lambda(i) + std::norm(y);
    if (!(s.lambda(i) >= kPastdStallPower))
      throw TrackerStall("subspace_tracking::pastd_step",
                         "power of component " + std::to_string(i) + " underflowed");
    const cplx gain = std::conj(y) / s.lambda(i);
    for (Eigen::Index k = 0; k < K; ++k) w[k] += (x(k) - w[k] * y) * gain;
    for (Eigen::Index k = 0; k < K; ++k) x(k) -= w[k] * y;
#ifdef SUBTRACK_COUNT_OPS
    s.multiplies += 4 * static_cast<std::uint64_t>(K);
#endif
  }
  ++s.steps;
  if (s.orth_period > 0 && s.steps % static_cast<std::uint64_t>(s.orth_period) == 0)
    orthonormalize(s.W);
}

/// Stateful wrapper used by the trackers.
class PastdTracker {
public:
  explicit PastdTracker(PastdState s) : state_(std::move(s)) {}

  const CMatrix& step(const CVector& x) {
    pastd_step(state_, x);
    return state_.W;
  }

  const CMatrix& basis() const { return state_.W; }
  const PastdState& state() const { return state_; }

private:
  PastdState state_;
};

}  // namespace subtrack

#endif  // SUBTRACK_SUBSPACE_TRACKING_HPP_
