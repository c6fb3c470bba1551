#ifndef SUBTRACK_TESTS_FIXTURES_HPP_
#define SUBTRACK_TESTS_FIXTURES_HPP_

// Small linear-Gaussian systems in the tracker's state-space form, plus
// forward and backward passes driven through the library's Kalman steps.

#include <vector>

#include "oracles.hpp"
#include "subtrack/kalman_core.hpp"

namespace fixture {

using namespace subtrack;

struct LinearSystem {
  ArTransitionModel model;
  std::vector<ObservationRow> rows;
  std::vector<cplx> y;
  std::vector<CVector> truth;  // stacked states
  CMatrix P0;                  // prior covariance of the first state
  double s2 = 1.0;

  int length() const { return static_cast<int>(rows.size()); }
};

/// Random stable diagonal AR(p) model of r components with full R_eta.
inline ArTransitionModel random_model(std::mt19937_64& rng, int r, int p, bool correlated = true) {
  std::uniform_real_distribution<double> mag(0.3, 0.9), ang(-3.0, 3.0);
  auto m = ArTransitionModel::zeros(p, r);
  for (int i = 0; i < r; ++i) {
    // Roots inside the unit circle: product form for p = 2.
    const cplx a = std::polar(mag(rng), ang(rng));
    if (p == 1) {
      m.coeffs[0](i) = a;
    } else {
      const cplx b = std::polar(mag(rng), ang(rng));
      m.coeffs[0](i) = a + b;
      m.coeffs[1](i) = -a * b;
      for (int l = 2; l < p; ++l) m.coeffs[l](i) = 0.0;
    }
  }
  if (correlated) {
    const CMatrix B = oracle::random_matrix(rng, r, r);
    m.R_eta = 0.3 * B * B.adjoint() / static_cast<double>(r) + 0.05 * CMatrix::Identity(r, r);
  } else {
    m.R_eta = CMatrix::Zero(r, r);
    for (int i = 0; i < r; ++i) m.R_eta(i, i) = 0.2 + 0.1 * i;
  }
  return m;
}

/// Simulates N steps: Z(1) ~ CN(0, P0), Z(n+1) = F Z(n) + eta*, y = D Z + v.
inline LinearSystem simulate(std::mt19937_64& rng, const ArTransitionModel& model, int N, double s2,
                             double prior_var = 1.0) {
  LinearSystem sys;
  sys.model = model;
  sys.s2 = s2;
  const auto d = model.state_dim();
  const int r = model.r;
  sys.P0 = prior_var * CMatrix::Identity(d, d);
  const CMatrix F = model.companion();
  const CMatrix L = model.R_eta.llt().matrixL();
  CVector Z(d);
  for (Eigen::Index i = 0; i < d; ++i) Z(i) = oracle::cnormal(rng, prior_var);
  for (int n = 0; n < N; ++n) {
    if (n) {
      CVector w(r);
      for (int i = 0; i < r; ++i) w(i) = oracle::cnormal(rng, 1.0);
      Z = F * Z;
      Z.head(r) += L * w;
    }
    ObservationRow row;
    row.D = Eigen::RowVectorXcd::Zero(d);
    for (int i = 0; i < r; ++i) row.D(i) = oracle::cnormal(rng, 1.0);
    row.noise_var = s2;
    sys.y.push_back((row.D * Z).value() + oracle::cnormal(rng, s2));
    sys.rows.push_back(row);
    sys.truth.push_back(Z);
  }
  return sys;
}

/// Filtered forward beliefs K(n, n) for every n.
inline std::vector<KalmanBelief> forward_pass(const LinearSystem& sys, std::vector<UpdateOutput>* updates = nullptr) {
  const auto d = sys.model.state_dim();
  KalmanBelief pred{CVector::Zero(d), sys.P0, Conditioning::predicted};
  std::vector<KalmanBelief> out;
  for (int n = 0; n < sys.length(); ++n) {
    auto upd = kf_update(pred, sys.rows[n], sys.y[n]);
    out.push_back(upd.belief);
    pred = kf_predict(upd.belief, sys.model);
    if (updates) updates->push_back(std::move(upd));
  }
  return out;
}

/// Filtered backward beliefs K_b(n, n), starting from a diffuse prior at the
/// last step and running on the inverted model.
inline std::vector<KalmanBelief> backward_pass(const LinearSystem& sys, double prior_var) {
  const auto d = sys.model.state_dim();
  const auto bm = backward_model(sys.model);
  std::vector<KalmanBelief> out(sys.length());
  KalmanBelief pred{CVector::Zero(d), prior_var * CMatrix::Identity(d, d), Conditioning::predicted};
  for (int n = sys.length() - 1; n >= 0; --n) {
    const auto upd = kf_update(pred, sys.rows[n], sys.y[n]);
    out[n] = upd.belief;
    pred = kf_predict(upd.belief, bm.Phi_b, bm.R_eta_b);
  }
  return out;
}

}  // namespace fixture

#endif  // SUBTRACK_TESTS_FIXTURES_HPP_
