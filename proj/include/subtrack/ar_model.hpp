#ifndef SUBTRACK_AR_MODEL_HPP_
#define SUBTRACK_AR_MODEL_HPP_

#include <vector>

#include "subtrack/types.hpp"

namespace subtrack {

/// Order-p AR model of r components with diagonal coefficient blocks.
///
/// coeffs[l-1](i) is phi_i(l). The stacked state is
/// [z(n); z(n-1); ...; z(n-p+1)], so the companion matrix carries the
/// coefficient blocks in its first block row and identities on the block
/// sub-diagonal.
struct ArTransitionModel {
  int p = 1;
  int r = 0;
  std::vector<CVector> coeffs;
  CMatrix R_eta;  // r x r

  static ArTransitionModel zeros(int p, int r) {
    ArTransitionModel m;
    m.p = p;
    m.r = r;
    m.coeffs.assign(p, CVector::Zero(r));
    m.R_eta = CMatrix::Zero(r, r);
    return m;
  }

  Eigen::Index state_dim() const { return static_cast<Eigen::Index>(r) * p; }

  /// Diagonal block Phi(l) as a dense r x r matrix, l in 1..p.
  CMatrix block(int l) const { return coeffs[l - 1].asDiagonal(); }

  CMatrix companion() const {
    const auto n = state_dim();
    CMatrix F = CMatrix::Zero(n, n);
    for (int l = 0; l < p; ++l)
      for (int i = 0; i < r; ++i) F(i, static_cast<Eigen::Index>(l) * r + i) = coeffs[l](i);
    for (Eigen::Index i = r; i < n; ++i) F(i, i - r) = cplx(1.0, 0.0);
    return F;
  }

  /// [R_eta, 0; 0, 0] in the stacked coordinates.
  CMatrix R_eta_star() const {
    const auto n = state_dim();
    CMatrix Q = CMatrix::Zero(n, n);
    Q.topLeftCorner(r, r) = R_eta;
    return Q;
  }

  bool same_coefficients(const ArTransitionModel& o) const {
    if (p != o.p || r != o.r) return false;
    for (int l = 0; l < p; ++l)
      if (coeffs[l] != o.coeffs[l]) return false;
    return true;
  }
};

}  // namespace subtrack

#endif  // SUBTRACK_AR_MODEL_HPP_
