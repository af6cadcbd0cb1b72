#ifndef RSM_MARKOV_HPP
#define RSM_MARKOV_HPP

// Dense stochastic-matrix kernel: stationary distributions, the limiting and
// fundamental matrices, and the perturbation identity that maps a change in
// transition matrix to a change in stationary distribution.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "rsm/errors.hpp"
#include "rsm/tolerances.hpp"

namespace rsm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Max absolute row sum.
inline double inf_norm(const Matrix& m) {
  return m.rows() == 0 ? 0.0 : m.cwiseAbs().rowwise().sum().maxCoeff();
}

/**
 * Square matrix with nonnegative entries whose rows all sum to 1 - deficit.
 *
 * deficit is 0 for an ordinary transition matrix. A positive deficit marks a
 * substochastic matrix such as P - (lambda/n) J, the restart-free remainder of
 * a restart-mixed chain.
 */
class StochasticMatrix {
public:
  explicit StochasticMatrix(Matrix entries) : StochasticMatrix(std::move(entries), 0.0) {}

  static StochasticMatrix substochastic(Matrix entries, double row_deficit) {
    if (!(row_deficit > 0.0 && row_deficit <= 1.0))
      throw InvalidMatrix("row deficit must lie in (0, 1]");
    return StochasticMatrix(std::move(entries), row_deficit);
  }

  static StochasticMatrix uniform(Index n) {
    return StochasticMatrix(Matrix::Constant(n, n, 1.0 / static_cast<double>(n)));
  }

  Index size() const noexcept { return entries_.rows(); }
  const Matrix& matrix() const noexcept { return entries_; }
  double operator()(Index i, Index j) const { return entries_(i, j); }
  double row_deficit() const noexcept { return deficit_; }
  bool is_substochastic() const noexcept { return deficit_ > 0.0; }

private:
  StochasticMatrix(Matrix entries, double deficit)
    : entries_(std::move(entries)), deficit_(deficit) {
    if (entries_.rows() != entries_.cols() || entries_.rows() == 0)
      throw ShapeError("stochastic matrix must be square and nonempty, got " +
                       std::to_string(entries_.rows()) + "x" +
                       std::to_string(entries_.cols()));
    if (!entries_.allFinite())
      throw InvalidMatrix("non-finite entry");
    if (entries_.minCoeff() < 0.0)
      throw InvalidMatrix("negative entry " + std::to_string(entries_.minCoeff()));
    const double target = 1.0 - deficit_;
    for (Index i = 0; i < entries_.rows(); ++i) {
      const double s = entries_.row(i).sum();
      if (std::abs(s - target) > tolerances::row_sum)
        throw InvalidMatrix("row " + std::to_string(i) + " sums to " +
                            std::to_string(s) + ", expected " + std::to_string(target));
    }
  }

  Matrix entries_;
  double deficit_ = 0.0;
};

/// Probability vector over n items.
class Distribution {
public:
  explicit Distribution(Vector probs) : probs_(std::move(probs)) {
    if (probs_.size() == 0)
      throw ShapeError("empty distribution");
    if (!probs_.allFinite() || probs_.minCoeff() < 0.0)
      throw InvalidMatrix("distribution entries must be finite and nonnegative");
    if (std::abs(probs_.sum() - 1.0) > tolerances::row_sum)
      throw InvalidMatrix("distribution sums to " + std::to_string(probs_.sum()));
  }

  /// Unit mass at item u.
  static Distribution unit(Index n, Index u) {
    if (u < 0 || u >= n)
      throw ShapeError("unit index out of range");
    Vector v = Vector::Zero(n);
    v(u) = 1.0;
    return Distribution(std::move(v));
  }

  static Distribution uniform(Index n) {
    return Distribution(Vector::Constant(n, 1.0 / static_cast<double>(n)));
  }

  Index size() const noexcept { return probs_.size(); }
  const Vector& probs() const noexcept { return probs_; }
  double operator[](Index i) const { return probs_(i); }

private:
  Vector probs_;
};

namespace detail {

// Clamp round-off negatives and renormalize; anything worse than tol is a
// genuine failure.
inline Distribution to_distribution(Vector p, double tol, const char* where) {
  if (!p.allFinite() || p.minCoeff() < -tol)
    throw NoUniqueStationary(std::string(where) + ": solution has negative mass");
  p = p.cwiseMax(0.0);
  const double s = p.sum();
  if (!(s > 0.0))
    throw NoUniqueStationary(std::string(where) + ": zero mass");
  return Distribution(p / s);
}

inline double stationary_residual(const Matrix& P, const Vector& p) {
  return (P.transpose() * p - p).cwiseAbs().maxCoeff();
}

inline Distribution stationary_direct(const Matrix& P) {
  const Index n = P.rows();
  // p^T (P - I) = 0 together with sum(p) = 1, as an (n+1) x n system.
  Matrix A(n + 1, n);
  A.topRows(n) = P.transpose() - Matrix::Identity(n, n);
  A.row(n).setOnes();
  Vector b = Vector::Zero(n + 1);
  b(n) = 1.0;

  Eigen::ColPivHouseholderQR<Matrix> qr(A);
  qr.setThreshold(1e-11);
  if (qr.rank() < n)
    throw NoUniqueStationary("stationary system has rank " + std::to_string(qr.rank()) +
                             " < " + std::to_string(n) + "; mix in a restart");
  Vector p = qr.solve(b);
  return to_distribution(std::move(p), tolerances::stationary_residual, "direct solve");
}

inline Distribution stationary_power(const Matrix& P) {
  const Index n = P.rows();
  // Lazy chain (I + P)/2 has the same stationary distribution and is aperiodic.
  Vector x = Vector::Constant(n, 1.0 / static_cast<double>(n));
  const Matrix Pt = P.transpose();
  for (std::size_t step = 0; step < tolerances::power_iteration_cap; ++step) {
    Vector next = 0.5 * (x + Pt * x);
    next /= next.sum();
    const double change = (next - x).lpNorm<1>();
    x = std::move(next);
    if (change <= tolerances::power_iteration)
      return to_distribution(std::move(x), tolerances::stationary_residual, "power iteration");
  }
  throw NoUniqueStationary("power iteration did not converge");
}

} // namespace detail

/// Stationary distribution p with p^T P = p^T.
///
/// Direct solve of the augmented system for small chains, power iteration on
/// the lazy chain above tolerances::direct_solve_max_n states.
inline Distribution stationary(const StochasticMatrix& P) {
  if (P.is_substochastic())
    throw ShapeError("stationary distribution requires a stochastic matrix");
  const Matrix& M = P.matrix();
  Distribution p = M.rows() <= static_cast<Index>(tolerances::direct_solve_max_n)
                     ? detail::stationary_direct(M)
                     : detail::stationary_power(M);
  const double residual = detail::stationary_residual(M, p.probs());
  if (residual > tolerances::stationary_residual)
    throw NoUniqueStationary("stationary residual " + std::to_string(residual));
  return p;
}

/// P-infinity = 1 p^T; every row is the stationary distribution.
inline Matrix limiting_matrix(const Distribution& p) {
  return Vector::Ones(p.size()) * p.probs().transpose();
}

inline Matrix limiting_matrix(const StochasticMatrix& P) {
  return limiting_matrix(stationary(P));
}

/// Z = [I - (P - 1 p^T)]^{-1}, together with the p it was built against.
class FundamentalMatrix {
public:
  const Matrix& matrix() const noexcept { return z_; }
  const Distribution& stationary() const noexcept { return p_; }
  Index size() const noexcept { return z_.rows(); }

private:
  FundamentalMatrix(Matrix z, Distribution p) : z_(std::move(z)), p_(std::move(p)) {}

  friend FundamentalMatrix fundamental_matrix(const StochasticMatrix&, const Distribution&);

  Matrix z_;
  Distribution p_;
};

/// Fundamental matrix of P given its (already computed) stationary
/// distribution. Direct LU inversion.
inline FundamentalMatrix fundamental_matrix(const StochasticMatrix& P, const Distribution& p) {
  if (P.is_substochastic())
    throw ShapeError("fundamental matrix requires a stochastic matrix");
  const Index n = P.size();
  if (p.size() != n)
    throw ShapeError("stationary distribution has wrong length");
  const Matrix I = Matrix::Identity(n, n);
  const Matrix A = I - (P.matrix() - limiting_matrix(p));
  Eigen::FullPivLU<Matrix> lu(A);
  if (!lu.isInvertible())
    throw SingularFundamental("I - (P - P_inf) is singular");
  Matrix z = lu.inverse();
  const double residual = (z * A - I).cwiseAbs().maxCoeff();
  if (!(residual <= tolerances::fundamental_residual))
    throw SingularFundamental("inverse residual " + std::to_string(residual));
  return FundamentalMatrix(std::move(z), p);
}

inline FundamentalMatrix fundamental_matrix(const StochasticMatrix& P) {
  return fundamental_matrix(P, stationary(P));
}

/// Q = P - (lambda/n) J, the part of a restart-mixed chain left after removing
/// the uniform restart. Rows sum to 1 - lambda.
inline StochasticMatrix restart_remainder(const StochasticMatrix& P, double lambda) {
  const Index n = P.size();
  Matrix q = P.matrix().array() - lambda / static_cast<double>(n);
  // Entries of a restart-mixed chain are >= lambda/n; clip round-off.
  if (q.minCoeff() < -tolerances::row_sum)
    throw InvalidMatrix("matrix is not restart-mixed with lambda = " + std::to_string(lambda));
  q = q.cwiseMax(0.0);
  return StochasticMatrix::substochastic(std::move(q), lambda);
}

/// (I - Q)^{-1} for a substochastic Q, by direct inversion.
inline Matrix restart_kernel(const StochasticMatrix& Q) {
  if (!Q.is_substochastic())
    throw ShapeError("restart kernel requires a substochastic matrix");
  const Index n = Q.size();
  Eigen::FullPivLU<Matrix> lu(Matrix::Identity(n, n) - Q.matrix());
  if (!lu.isInvertible())
    throw SingularFundamental("I - Q is singular");
  return lu.inverse();
}

/// p_from^T * delta * kernel.
///
/// With p_from the stationary distribution of P and kernel the fundamental
/// matrix of P*, and delta = P - P*, this is exactly (p - p*)^T.
inline Vector stationary_shift(const Distribution& p_from, const Matrix& delta, const Matrix& kernel) {
  const Index n = p_from.size();
  if (delta.rows() != n || delta.cols() != n || kernel.rows() != n || kernel.cols() != n)
    throw ShapeError("stationary_shift: dimension mismatch");
  return kernel.transpose() * (delta.transpose() * p_from.probs());
}

inline Vector stationary_shift(const Distribution& p_from, const Matrix& delta, const FundamentalMatrix& Z) {
  return stationary_shift(p_from, delta, Z.matrix());
}

} // namespace rsm

#endif // RSM_MARKOV_HPP
