#ifndef SUBTRACK_TYPES_HPP_
#define SUBTRACK_TYPES_HPP_

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace subtrack {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

/// Base of every error thrown by the library. `where()` names the module and
/// operation that failed, e.g. "kalman_core::backward_model".
class Error : public std::runtime_error {
public:
  Error(std::string where, const std::string& what)
      : std::runtime_error(where + ": " + what), where_(std::move(where)) {}
  const std::string& where() const noexcept { return where_; }

private:
  std::string where_;
};

#define SUBTRACK_DEFINE_ERROR(Name)                                            \
  class Name : public Error {                                                  \
  public:                                                                      \
    using Error::Error;                                                        \
  };

SUBTRACK_DEFINE_ERROR(InvalidInput)
SUBTRACK_DEFINE_ERROR(BoundsError)
SUBTRACK_DEFINE_ERROR(DegenerateInput)
SUBTRACK_DEFINE_ERROR(DivergenceError)
SUBTRACK_DEFINE_ERROR(TrackerStall)
SUBTRACK_DEFINE_ERROR(NumericError)
SUBTRACK_DEFINE_ERROR(SingularModel)
SUBTRACK_DEFINE_ERROR(FusionError)
SUBTRACK_DEFINE_ERROR(UndefinedMetric)

#undef SUBTRACK_DEFINE_ERROR

/// K x r orthonormal basis of the channel signal subspace.
struct SubspaceBasis {
  CMatrix Q;
  Eigen::Index rank() const { return Q.cols(); }
  Eigen::Index taps() const { return Q.rows(); }
};

namespace detail {

inline bool all_finite(const CMatrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag()))
        return false;
  return true;
}

inline bool all_finite(const CVector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!std::isfinite(v(i).real()) || !std::isfinite(v(i).imag())) return false;
  return true;
}

inline CMatrix symmetrize(const CMatrix& m) { return 0.5 * (m + m.adjoint()); }

}  // namespace detail
}  // namespace subtrack

#endif  // SUBTRACK_TYPES_HPP_
