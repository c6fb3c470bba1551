#ifndef SUBTRACK_TESTS_ORACLES_HPP_
#define SUBTRACK_TESTS_ORACLES_HPP_

// Reference computations that share no code with the library: dense batch
// LMMSE over stacked linear-Gaussian systems, naive double-loop averages,
// Gaussian elimination, Lyapunov solves by vectorization.

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

inline cplx cnormal(std::mt19937_64& rng, double var) {
  std::normal_distribution<double> g(0.0, std::sqrt(var / 2.0));
  const double re = g(rng);
  const double im = g(rng);
  return {re, im};
}

inline CMatrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  CMatrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = cnormal(rng, 1.0);
  return m;
}

/// Gaussian elimination with partial pivoting on a copy.
inline CVector gauss_solve(CMatrix A, CVector b) {
  const auto n = A.rows();
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::Index piv = c;
    for (Eigen::Index i = c + 1; i < n; ++i)
      if (std::abs(A(i, c)) > std::abs(A(piv, c))) piv = i;
    A.row(c).swap(A.row(piv));
    std::swap(b(c), b(piv));
    for (Eigen::Index i = c + 1; i < n; ++i) {
      const cplx f = A(i, c) / A(c, c);
      for (Eigen::Index j = c; j < n; ++j) A(i, j) -= f * A(c, j);
      b(i) -= f * b(c);
    }
  }
  CVector x(n);
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    cplx s = b(i);
    for (Eigen::Index j = i + 1; j < n; ++j) s -= A(i, j) * x(j);
    x(i) = s / A(i, i);
  }
  return x;
}

/// Stationary covariance P = F P F^H + Q by solving the vectorized system.
inline CMatrix lyapunov(const CMatrix& F, const CMatrix& Q) {
  const auto n = F.rows();
  const CMatrix Fc = F.conjugate();
  CMatrix A = CMatrix::Identity(n * n, n * n);
  // vec(F P F^H) = (conj(F) kron F) vec(P), column-major vec.
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b)
      for (Eigen::Index c = 0; c < n; ++c)
        for (Eigen::Index d = 0; d < n; ++d) A(b * n + a, d * n + c) -= Fc(b, d) * F(a, c);
  CVector q(n * n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) q(j * n + i) = Q(i, j);
  const CVector p = gauss_solve(A, q);
  CMatrix P(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) P(i, j) = p(j * n + i);
  return P;
}

struct Posterior {
  CVector mean;
  CMatrix cov;
};

/// Linear-Gaussian chain X(1..N) of dimension d:
///   X(1) ~ CN(0, P0),  X(t+1) = F X(t) + w,  w ~ CN(0, Qw),
///   y(t) = H(t) X(t) + v(t),  v ~ CN(0, s2)  for t in `observed`.
/// Returns the LMMSE estimate of X(target) from one dense joint solve.
inline Posterior batch_lmmse(const CMatrix& P0, const CMatrix& F, const CMatrix& Qw,
                             const std::vector<Eigen::RowVectorXcd>& H, const std::vector<cplx>& y,
                             double s2, const std::vector<int>& observed, int target) {
  const auto d = P0.rows();
  const int N = static_cast<int>(H.size());
  // Sources: X(1), w(1..N-1). X(t) = F^{t-1} X(1) + sum_k F^{t-1-k} w(k).
  const Eigen::Index ns = d * N;
  CMatrix S = CMatrix::Zero(ns, ns);
  S.topLeftCorner(d, d) = P0;
  for (int k = 1; k < N; ++k) S.block(k * d, k * d, d, d) = Qw;
  std::vector<CMatrix> Fpow(N, CMatrix::Identity(d, d));
  for (int i = 1; i < N; ++i) Fpow[i] = F * Fpow[i - 1];
  CMatrix A = CMatrix::Zero(d * N, ns);  // stacked X = A * sources
  for (int t = 0; t < N; ++t) {
    A.block(t * d, 0, d, d) = Fpow[t];
    for (int k = 1; k <= t; ++k) A.block(t * d, k * d, d, d) = Fpow[t - k];
  }
  const CMatrix Sx = A * S * A.adjoint();
  const auto m = static_cast<Eigen::Index>(observed.size());
  CMatrix Hs = CMatrix::Zero(m, d * N);
  CVector ys(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    Hs.block(i, observed[i] * d, 1, d) = H[observed[i]];
    ys(i) = y[observed[i]];
  }
  const CMatrix Syy = Hs * Sx * Hs.adjoint() + s2 * CMatrix::Identity(m, m);
  const CMatrix Sty = Sx.middleRows(target * d, d) * Hs.adjoint();
  const Eigen::FullPivLU<CMatrix> lu(Syy);
  Posterior out;
  out.mean = Sty * lu.solve(ys);
  out.cov = Sx.block(target * d, target * d, d, d) - Sty * lu.solve(Sty.adjoint());
  return out;
}

/// Weighted least squares on the stacked system [z1; z2] = [I; I] x + e with
/// Cov(e) = blkdiag(C1, C2), solved by whitening and QR.
inline Posterior combine_two_estimates(const CVector& z1, const CMatrix& C1, const CVector& z2,
                                       const CMatrix& C2) {
  const auto d = z1.size();
  const CMatrix L1 = C1.llt().matrixL(), L2 = C2.llt().matrixL();
  CMatrix A(2 * d, d);
  CVector b(2 * d);
  A.topRows(d) = L1.triangularView<Eigen::Lower>().solve(CMatrix::Identity(d, d));
  A.bottomRows(d) = L2.triangularView<Eigen::Lower>().solve(CMatrix::Identity(d, d));
  b.head(d) = L1.triangularView<Eigen::Lower>().solve(z1);
  b.tail(d) = L2.triangularView<Eigen::Lower>().solve(z2);
  const Eigen::HouseholderQR<CMatrix> qr(A);
  Posterior out;
  out.mean = qr.solve(b);
  const CMatrix R = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
  const CMatrix Rinv = R.triangularView<Eigen::Upper>().solve(CMatrix::Identity(d, d));
  out.cov = Rinv * Rinv.adjoint();
  return out;
}

/// (1/N) sum_{n >= m} z(n) conj(z(n-m)), by direct loops.
inline cplx naive_autocorr(const std::vector<cplx>& z, int m, int N) {
  cplx acc{0.0, 0.0};
  for (int n = 0; n < N; ++n)
    if (n - m >= 0) acc += z[n] * std::conj(z[n - m]);
  return acc / static_cast<double>(N);
}

/// Largest principal angle (degrees) between the column spans of two
/// orthonormal bases.
inline double max_principal_angle_deg(const CMatrix& A, const CMatrix& B) {
  const Eigen::JacobiSVD<CMatrix> svd(A.adjoint() * B);
  const double smin = std::min(1.0, svd.singularValues().minCoeff());
  return std::acos(smin) * 180.0 / 3.14159265358979323846;
}

}  // namespace oracle

#endif  // SUBTRACK_TESTS_ORACLES_HPP_
