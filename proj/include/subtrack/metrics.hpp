#ifndef SUBTRACK_METRICS_HPP_
#define SUBTRACK_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "subtrack/linalg_spectral.hpp"
#include "subtrack/types.hpp"

namespace subtrack {

inline constexpr double kDefaultDbFloor = -120.0;

struct PredictionError {
  RVector per_n_db;     // same length as the input
  double mean_db = 0.0;  // linear-scale mean over the window, in dB
  double reference_power = 0.0;
};

/// 10 log10(|xi(n)|^2 / E|r|^2), floored at floor_db. E|r|^2 and the mean are
/// taken over [begin, end) of the sequences; per-n values cover every sample.
inline PredictionError normalized_prediction_error(const CVector& xi, const CVector& r,
                                                   double floor_db = kDefaultDbFloor,
                                                   Eigen::Index begin = 0,
                                                   Eigen::Index end = -1) {
  constexpr const char* where = "tracker_pipeline::normalized_prediction_error";
  if (xi.size() != r.size()) throw InvalidInput(where, "xi and r lengths differ");
  if (end < 0) end = r.size();
  if (begin < 0 || begin >= end || end > r.size()) throw InvalidInput(where, "empty evaluation window");

  const double count = static_cast<double>(end - begin);
  const double ref = r.segment(begin, end - begin).squaredNorm() / count;
  if (!(ref > 0.0)) throw UndefinedMetric(where, "reference signal power is zero");

  auto to_db = [&](double lin) {
    if (!(lin > 0.0)) return floor_db;
    return std::max(floor_db, 10.0 * std::log10(lin));
  };

  PredictionError out;
  out.reference_power = ref;
  out.per_n_db.resize(xi.size());
  for (Eigen::Index n = 0; n < xi.size(); ++n) out.per_n_db(n) = to_db(std::norm(xi(n)) / ref);
  out.mean_db = to_db(xi.segment(begin, end - begin).squaredNorm() / count / ref);
  return out;
}

enum class CoherenceKind { taps, components };

/// rho[j,k] = sum conj(x_j) x_k / sqrt(sum |x_j|^2 sum |x_k|^2). Entries that
/// involve a zero-power channel are NaN and the channel is marked undefined.
struct CoherenceMatrix {
  CMatrix rho;
  std::vector<bool> defined;
  CoherenceKind kind = CoherenceKind::taps;

  bool entry_defined(Eigen::Index j, Eigen::Index k) const { return defined[j] && defined[k]; }
};

/// Columns of X are channels, rows are time samples.
inline CoherenceMatrix cross_path_coherence(const CMatrix& X, CoherenceKind kind) {
  if (X.rows() < 2) throw InvalidInput("tracker_pipeline::cross_path_coherence", "need >= 2 samples");
  const auto C = X.cols();
  const CMatrix G = X.adjoint() * X;  // G(j,k) = sum conj(x_j) x_k
  CoherenceMatrix out;
  out.kind = kind;
  out.rho.resize(C, C);
  out.defined.resize(C);
  for (Eigen::Index j = 0; j < C; ++j) out.defined[j] = G(j, j).real() > 0.0;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index j = 0; j < C; ++j)
    for (Eigen::Index k = 0; k < C; ++k) {
      if (!out.entry_defined(j, k))
        out.rho(j, k) = cplx(nan, nan);
      else if (j == k)
        out.rho(j, k) = cplx(1.0, 0.0);
      else
        out.rho(j, k) = G(j, k) / std::sqrt(G(j, j).real() * G(k, k).real());
    }
  return out;
}

/// Eigenvalues of R_h divided by the largest, descending.
inline RVector eigenvalue_spectrum(const CMatrix& R) {
  const auto dec = evd_hermitian(R);
  if (dec.lambda.size() == 0 || !(dec.lambda(0) > 0.0))
    throw UndefinedMetric("tracker_pipeline::eigenvalue_spectrum", "largest eigenvalue is not positive");
  return dec.lambda / dec.lambda(0);
}

}  // namespace subtrack

#endif  // SUBTRACK_METRICS_HPP_
