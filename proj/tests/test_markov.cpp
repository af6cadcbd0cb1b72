#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rsm/markov.hpp"
#include "rsm/topology.hpp"

using namespace rsm;
using rsm::testing::Rng;

namespace {

StochasticMatrix two_state() {
  Matrix m(2, 2);
  m << 0.5, 0.5, 0.9, 0.1;
  return StochasticMatrix(m);
}

StochasticMatrix restart_mixed(Rng& rng, Index n, std::size_t k, double lambda) {
  auto inst = rsm::testing::random_instance(rng, n, k);
  return StochasticMatrix(rsm::testing::naive_combine(inst.matrices, rsm::testing::random_simplex(rng, k), lambda));
}

} // namespace

TEST(StochasticMatrix, RejectsBadRows) {
  Matrix m(2, 2);
  m << 0.5, 0.4, 0.5, 0.5;
  EXPECT_THROW(StochasticMatrix{m}, InvalidMatrix);
  m << 1.2, -0.2, 0.5, 0.5;
  EXPECT_THROW(StochasticMatrix{m}, InvalidMatrix);
  EXPECT_THROW(StochasticMatrix{Matrix(2, 3)}, ShapeError);
}

TEST(StochasticMatrix, SubstochasticCarriesDeficit) {
  Matrix m = Matrix::Constant(3, 3, 0.85 / 3.0);
  const auto q = StochasticMatrix::substochastic(m, 0.15);
  EXPECT_TRUE(q.is_substochastic());
  EXPECT_DOUBLE_EQ(q.row_deficit(), 0.15);
  EXPECT_THROW(StochasticMatrix::substochastic(m, 0.2), InvalidMatrix);
  EXPECT_THROW(stationary(q), ShapeError);
}

TEST(Stationary, UniformMatrixGivesUniform) {
  for (Index n = 1; n <= 9; ++n) {
    const Distribution p = stationary(StochasticMatrix::uniform(n));
    for (Index i = 0; i < n; ++i)
      EXPECT_NEAR(p[i], 1.0 / static_cast<double>(n), 1e-14);
  }
}

TEST(Stationary, TwoStateChain) {
  // p = pP: p0 = 0.5 p0 + 0.9 p1  =>  p0 / p1 = 9/5.
  const Distribution p = stationary(two_state());
  EXPECT_NEAR(p[0], 9.0 / 14.0, 1e-14);
  EXPECT_NEAR(p[1], 5.0 / 14.0, 1e-14);
  const Vector oracle = rsm::testing::power_stationary(two_state().matrix());
  EXPECT_NEAR(p[0], oracle(0), 1e-12);
}

TEST(Stationary, IdentityHasNoUniqueStationary) {
  for (Index n = 2; n <= 5; ++n)
    EXPECT_THROW(stationary(StochasticMatrix(Matrix::Identity(n, n))), NoUniqueStationary);
}

TEST(Stationary, TwoClosedClassesRejected) {
  Matrix m = Matrix::Zero(4, 4);
  m.block(0, 0, 2, 2) << 0.3, 0.7, 0.6, 0.4;
  m.block(2, 2, 2, 2) << 0.5, 0.5, 0.2, 0.8;
  EXPECT_THROW(stationary(StochasticMatrix(m)), NoUniqueStationary);
}

TEST(Stationary, ReducibleWithSingleClosedClassIsFine) {
  // State 0 is transient, {1, 2} closed.
  Matrix m(3, 3);
  m << 0.2, 0.4, 0.4, 0.0, 0.5, 0.5, 0.0, 0.9, 0.1;
  const Distribution p = stationary(StochasticMatrix(m));
  EXPECT_NEAR(p[0], 0.0, 1e-14);
  EXPECT_NEAR(p[1], 9.0 / 14.0, 1e-12);
}

TEST(Stationary, MatchesPowerIterationOnRandomChains) {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = rsm::testing::unif_int(rng, 2, 12);
    const Matrix P = rsm::testing::random_sparse_stochastic(rng, n);
    const Distribution p = stationary(StochasticMatrix(P));
    const Vector oracle = rsm::testing::power_stationary(P);
    EXPECT_LT((p.probs() - oracle).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((P.transpose() * p.probs() - p.probs()).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Stationary, LargeChainUsesIterativePath) {
  Rng rng(5);
  const Index n = 90;
  const StochasticMatrix P = restart_mixed(rng, n, 3, 0.15);
  const Distribution p = stationary(P);
  const Vector oracle = rsm::testing::power_stationary(P.matrix());
  EXPECT_LT((p.probs() - oracle).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(LimitingMatrix, RowsAreTheStationaryDistribution) {
  const Matrix u = limiting_matrix(StochasticMatrix::uniform(4));
  EXPECT_LT((u - Matrix::Constant(4, 4, 0.25)).cwiseAbs().maxCoeff(), 1e-14);

  const Matrix l = limiting_matrix(two_state());
  for (Index r = 0; r < 2; ++r) {
    EXPECT_NEAR(l(r, 0), 9.0 / 14.0, 1e-14);
    EXPECT_NEAR(l(r, 1), 5.0 / 14.0, 1e-14);
  }
}

TEST(LimitingMatrix, TakesAnyDistributionToStationaryInOneStep) {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = rsm::testing::unif_int(rng, 2, 8);
    const StochasticMatrix P = restart_mixed(rng, n, 2, 0.15);
    const Distribution p = stationary(P);
    const Matrix L = limiting_matrix(p);
    const auto x = rsm::testing::random_simplex(rng, static_cast<std::size_t>(n));
    const Vector xv = Eigen::Map<const Vector>(x.data(), n);
    EXPECT_LT((L.transpose() * xv - p.probs()).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(FundamentalMatrix, UniformGivesIdentity) {
  for (Index n = 2; n <= 7; ++n) {
    const FundamentalMatrix Z = fundamental_matrix(StochasticMatrix::uniform(n));
    EXPECT_LT((Z.matrix() - Matrix::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(FundamentalMatrix, TwoStateMultipliesBack) {
  const StochasticMatrix P = two_state();
  const FundamentalMatrix Z = fundamental_matrix(P);
  const Matrix A = Matrix::Identity(2, 2) - (P.matrix() - limiting_matrix(P));
  EXPECT_LT((Z.matrix() * A - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-8);
  // P - P_inf has eigenvalue -0.4 on the complement of 1, so the series converges.
  const Matrix oracle = rsm::testing::neumann_series(P.matrix() - limiting_matrix(P));
  EXPECT_LT((Z.matrix() - oracle).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FundamentalMatrix, NormBoundOnRestartMixedChains) {
  Rng rng(31);
  const double lambda = 0.15;
  for (int trial = 0; trial < 40; ++trial) {
    const Index n = 5;
    const StochasticMatrix P = restart_mixed(rng, n, 3, lambda);
    const FundamentalMatrix Z = fundamental_matrix(P);
    const double gap = rsm::testing::inf_norm_oracle(P.matrix() - limiting_matrix(P));
    if (gap < 1.0) {
      EXPECT_LE(inf_norm(Z.matrix()), 1.0 / (1.0 - gap) + 1e-12);
    }

    // The restart remainder always has norm 1 - lambda, so its kernel is
    // bounded by 1 / lambda and equals the Neumann series.
    const StochasticMatrix Q = restart_remainder(P, lambda);
    EXPECT_NEAR(inf_norm(Q.matrix()), 1.0 - lambda, 1e-12);
    const Matrix K = restart_kernel(Q);
    EXPECT_LE(inf_norm(K), 1.0 / lambda + 1e-9);
    EXPECT_LT((K - rsm::testing::neumann_series(Q.matrix())).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(FundamentalMatrix, RejectsWrongStationaryLength) {
  EXPECT_THROW(fundamental_matrix(two_state(), Distribution::uniform(3)), ShapeError);
}

TEST(StationaryShift, ZeroDeltaGivesZero) {
  const StochasticMatrix P = two_state();
  const Vector s = stationary_shift(stationary(P), Matrix::Zero(2, 2), fundamental_matrix(P));
  EXPECT_EQ(s.cwiseAbs().maxCoeff(), 0.0);
}

TEST(StationaryShift, EqualsDifferenceOfStationaries) {
  Rng rng(41);
  const double lambda = 0.15;
  for (int trial = 0; trial < 30; ++trial) {
    auto inst = rsm::testing::random_instance(rng, 5, 3);
    const auto w = rsm::testing::random_simplex(rng, 3);
    const auto w_star = rsm::testing::random_simplex(rng, 3);
    const Matrix P = rsm::testing::naive_combine(inst.matrices, w, lambda);
    const Matrix P_star = rsm::testing::naive_combine(inst.matrices, w_star, lambda);
    const Vector p = rsm::testing::power_stationary(P);
    const Vector p_star = rsm::testing::power_stationary(P_star);

    const Distribution p_lib = stationary(StochasticMatrix(P));
    const FundamentalMatrix Z_star = fundamental_matrix(StochasticMatrix(P_star));
    const Vector shift = stationary_shift(p_lib, P - P_star, Z_star);
    EXPECT_LT((shift - (p - p_star)).cwiseAbs().maxCoeff(), 1e-8);

    // Same identity through the restart remainder Q* = P* - (lambda/n) J.
    const Matrix M = Matrix::Constant(5, 5, lambda / 5.0);
    const Matrix series = rsm::testing::neumann_series(P_star - M);
    const Vector via_series = stationary_shift(p_lib, P - P_star, series);
    EXPECT_LT((via_series - (p - p_star)).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(StationaryShift, DimensionMismatch) {
  EXPECT_THROW(stationary_shift(Distribution::uniform(3), Matrix::Zero(2, 2), Matrix::Identity(3, 3)),
               ShapeError);
}

TEST(Distribution, Invariants) {
  EXPECT_THROW(Distribution(Vector::Constant(3, 0.5)), InvalidMatrix);
  Vector v(2);
  v << 1.5, -0.5;
  EXPECT_THROW(Distribution{v}, InvalidMatrix);
  const Distribution e = Distribution::unit(4, 2);
  EXPECT_EQ(e[2], 1.0);
  EXPECT_EQ(e.probs().sum(), 1.0);
  EXPECT_THROW(Distribution::unit(4, 4), ShapeError);
}
