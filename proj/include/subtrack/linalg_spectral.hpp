#ifndef SUBTRACK_LINALG_SPECTRAL_HPP_
#define SUBTRACK_LINALG_SPECTRAL_HPP_

// Dense Hermitian eigendecomposition, subspace truncation and Yule-Walker
// solving. K is expected to stay below a few hundred.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "subtrack/types.hpp"

namespace subtrack {

/// Spectral decomposition with eigenvalues in descending order.
struct EigenDecomposition {
  CMatrix Q;       // eigenvectors as columns
  RVector lambda;  // descending
};

struct YuleWalkerSolution {
  CVector phi;                  // phi(1..p)
  double innovation_var = 0.0;  // clamped at zero
  double condition_estimate = 1.0;
  bool ridge_applied = false;
};

inline constexpr double kYuleWalkerRidge = 1e-8;
inline constexpr double kYuleWalkerConditionLimit = 1e12;

/// Eigendecomposition of a Hermitian matrix. The input is symmetrized as
/// (R + R^H)/2. Each eigenvector is rotated so its largest-magnitude entry is
/// real and positive (first such entry on ties), which makes the result
/// deterministic.
inline EigenDecomposition evd_hermitian(const CMatrix& R) {
  if (R.rows() != R.cols())
    throw InvalidInput("linalg_spectral::evd_hermitian", "matrix is not square");
  if (!detail::all_finite(R))
    throw InvalidInput("linalg_spectral::evd_hermitian", "non-finite entries");

  const Eigen::Index K = R.rows();
  EigenDecomposition out;
  if (K == 0) return out;

  Eigen::SelfAdjointEigenSolver<CMatrix> solver(detail::symmetrize(R));
  if (solver.info() != Eigen::Success)
    throw NumericError("linalg_spectral::evd_hermitian", "eigensolver did not converge");

  // Eigen returns ascending order.
  out.lambda = solver.eigenvalues().reverse();
  out.Q = solver.eigenvectors().rowwise().reverse();

  for (Eigen::Index j = 0; j < K; ++j) {
    auto v = out.Q.col(j);
    const double vmax = v.cwiseAbs().maxCoeff();
    Eigen::Index pivot = 0;
    for (Eigen::Index i = 0; i < K; ++i) {
      if (std::abs(v(i)) >= vmax * (1.0 - 1e-10)) {
        pivot = i;
        break;
      }
    }
    if (vmax > 0.0) v *= std::conj(v(pivot)) / std::abs(v(pivot));
  }
  return out;
}

/// Leading r eigenvectors.
inline SubspaceBasis truncate_subspace(const EigenDecomposition& dec, Eigen::Index r) {
  if (r < 1 || r > dec.Q.cols())
    throw InvalidInput("linalg_spectral::truncate_subspace",
                       "rank " + std::to_string(r) + " outside [1, " +
                           std::to_string(dec.Q.cols()) + "]");
  return SubspaceBasis{dec.Q.leftCols(r)};
}

/// Symmetrize and raise every eigenvalue to at least floor_rel * trace.
inline CMatrix psd_floor(const CMatrix& M, double floor_rel) {
  if (M.size() == 0) return M;
  CMatrix S = detail::symmetrize(M);
  const double tr = S.trace().real();
  if (!(tr > 0.0)) return CMatrix::Zero(M.rows(), M.cols());
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(S);
  const double floor = floor_rel * tr;
  RVector lam = solver.eigenvalues();
  if (lam.minCoeff() >= floor) return S;
  lam = lam.cwiseMax(floor);
  const CMatrix& V = solver.eigenvectors();
  return detail::symmetrize(V * lam.cast<cplx>().asDiagonal() * V.adjoint());
}

/// Solves the p x p Hermitian Toeplitz system T phi = [R(1) .. R(p)]^T with
/// T(j, l) = R(j - l) and R(-m) = conj(R(m)). `autocorr` holds R(0..p).
/// When the condition estimate exceeds 1e12 a ridge of `ridge * R(0)` is added
/// to the diagonal. The innovation variance R(0) - sum phi(l) R(-l) is clamped
/// at zero.
inline YuleWalkerSolution solve_yule_walker(std::span<const cplx> autocorr, int p,
                                            double ridge = kYuleWalkerRidge) {
  constexpr const char* where = "linalg_spectral::solve_yule_walker";
  if (p < 1) throw InvalidInput(where, "order p must be >= 1");
  if (autocorr.size() < static_cast<std::size_t>(p) + 1)
    throw InvalidInput(where, "need autocorrelations for lags 0..p");
  const double r0 = autocorr[0].real();
  if (!(r0 > 0.0) || !std::isfinite(r0))
    throw DegenerateInput(where, "R(0) must be real positive, got " + std::to_string(r0));
  for (int m = 0; m <= p; ++m)
    if (!std::isfinite(autocorr[m].real()) || !std::isfinite(autocorr[m].imag()))
      throw DegenerateInput(where, "non-finite autocorrelation");

  auto lag = [&](int m) -> cplx {
    return m >= 0 ? autocorr[m] : std::conj(autocorr[-m]);
  };

  CMatrix T(p, p);
  CVector rhs(p);
  for (int j = 0; j < p; ++j) {
    rhs(j) = lag(j + 1);
    for (int l = 0; l < p; ++l) T(j, l) = lag(j - l);
  }
  // Diagonal must be exactly real.
  for (int j = 0; j < p; ++j) T(j, j) = cplx(r0, 0.0);

  YuleWalkerSolution sol;
  const RVector ev = Eigen::SelfAdjointEigenSolver<CMatrix>(T, Eigen::EigenvaluesOnly).eigenvalues();
  const double lmax = ev.cwiseAbs().maxCoeff();
  const double lmin = ev.minCoeff();
  sol.condition_estimate =
      lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
  if (sol.condition_estimate > kYuleWalkerConditionLimit) {
    T.diagonal().array() += cplx(ridge * r0, 0.0);
    sol.ridge_applied = true;
  }

  sol.phi = T.partialPivLu().solve(rhs);
  if (!detail::all_finite(sol.phi))
    throw DegenerateInput(where, "Toeplitz solve produced non-finite coefficients");

  cplx eta = cplx(r0, 0.0);
  for (int l = 1; l <= p; ++l) eta -= sol.phi(l - 1) * lag(-l);
  sol.innovation_var = std::max(0.0, eta.real());
  return sol;
}

}  // namespace subtrack

#endif  // SUBTRACK_LINALG_SPECTRAL_HPP_
