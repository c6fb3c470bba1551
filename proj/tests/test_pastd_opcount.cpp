// Built with SUBTRACK_COUNT_OPS: checks the per-step multiply count of the
// deflation sweep.

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "subtrack/subspace_tracking.hpp"

#ifndef SUBTRACK_COUNT_OPS
#error "this test needs SUBTRACK_COUNT_OPS"
#endif

using namespace subtrack;

TEST(PastdOpCount, FourKrPerStep) {
  std::mt19937_64 rng(1);
  for (int K : {8, 16, 64})
    for (int r : {1, 3, 6}) {
      const CMatrix Q = Eigen::HouseholderQR<CMatrix>(oracle::random_matrix(rng, K, r)).householderQ() *
                        CMatrix::Identity(K, r);
      auto s = PastdState::from_basis(Q, RVector::Ones(r), 0.99, 0);
      for (int n = 0; n < 10; ++n) pastd_step(s, oracle::random_matrix(rng, K, 1).col(0));
      EXPECT_EQ(s.multiplies, 10u * 4u * static_cast<std::uint64_t>(K * r)) << "K=" << K << " r=" << r;
    }
}
