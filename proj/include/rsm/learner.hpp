#ifndef RSM_LEARNER_HPP
#define RSM_LEARNER_HPP

// Weight learning for the random shopper model.
//
// fit() is the iterative perturbation method: at the current weights it
// linearizes every labelled stationary probability through the fundamental
// matrix, solves a small box- and sum-constrained least-squares problem for a
// bounded weight step, and repeats until the step vanishes. grid_search() is
// the brute-force simplex enumeration used to cross-check it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rsm/errors.hpp"
#include "rsm/markov.hpp"
#include "rsm/parallel.hpp"
#include "rsm/tolerances.hpp"
#include "rsm/topology.hpp"

namespace rsm {

struct LearnerConfig {
  double lambda = 0.15;
  double eta = 0.05;           // per-coordinate step bound
  double halt_eps = 1e-6;      // halt when |x|_inf <= halt_eps
  std::size_t max_iters = 500;
  double qp_tol = 1e-10;       // KKT residual for the step subproblem
  std::optional<WeightVector> init;  // nullopt: uniform
  std::size_t threads = 1;
  // The pairwise-difference objective variant is not implemented; setting
  // this is rejected by validate().
  bool pairwise_difference = false;

  void validate() const {
    if (!(lambda > 0.0 && lambda < 1.0))
      throw ConfigError("lambda must lie in (0, 1)");
    if (!(eta > 0.0 && eta <= 1.0 - lambda))
      throw ConfigError("eta must lie in (0, 1 - lambda]");
    if (!(halt_eps > 0.0))
      throw ConfigError("halt_eps must be positive");
    if (!(qp_tol > 0.0))
      throw ConfigError("qp_tol must be positive");
    if (pairwise_difference)
      throw ConfigError("the pairwise-difference objective is not implemented");
  }
};

/// A displayed item set for one query, with one topology per feature.
struct Context {
  std::string query_id;
  std::string context_id;
  std::vector<std::string> item_ids;
  std::vector<Topology> topologies;

  std::size_t num_features() const noexcept { return topologies.size(); }
  std::size_t num_items() const noexcept { return item_ids.size(); }
};

/// One labelled example: the target stationary probability of item `target_u`.
struct TrainingInstance {
  std::shared_ptr<const Context> context;
  std::size_t target_u = 0;
  double target_prob = 0.0;
};

struct LinearizedRow {
  double residual = 0.0;   // p*_u - p_u at the current weights
  Vector gradient;         // g_i = p^T T(i) Z e_u
};

struct FitResult {
  WeightVector weights = WeightVector::uniform(1);  // reporting form
  std::size_t iterations = 0;
  double final_step_norm = std::numeric_limits<double>::infinity();
  std::vector<double> per_iteration_loss;   // mean squared residual
  std::vector<double> per_iteration_err_s;  // mean absolute residual
  bool converged = false;
};

namespace detail {

inline void check_instance(const TrainingInstance& inst) {
  if (!inst.context)
    throw InvalidInput("training instance has no context");
  if (inst.target_u >= inst.context->num_items())
    throw ShapeError("target item index out of range");
  if (!(inst.target_prob >= 0.0 && inst.target_prob <= 1.0))
    throw InvalidInput("target probability must lie in [0, 1]");
}

// Per-context quantities needed for every instance in that context.
struct ContextLinearization {
  Distribution stationary;
  Matrix sensitivity;  // row i = p^T T(i) Z
};

inline ContextLinearization linearize_context(const Context& ctx, const WeightVector& w_native,
                                              double lambda) {
  const StochasticMatrix G = combine(ctx.topologies, w_native.to_reporting(lambda), lambda);
  Distribution p = stationary(G);
  const FundamentalMatrix Z = fundamental_matrix(G, p);
  const auto k = static_cast<Index>(ctx.num_features());
  Matrix sens(k, G.size());
  for (Index i = 0; i < k; ++i)
    sens.row(i) = (p.probs().transpose() * ctx.topologies[static_cast<std::size_t>(i)].matrix()) *
                  Z.matrix();
  return {std::move(p), std::move(sens)};
}

// Groups instances by shared context, preserving first-appearance order.
struct ContextGroups {
  std::vector<const Context*> contexts;
  std::vector<std::vector<std::size_t>> members;
};

inline ContextGroups group_by_context(std::span<const TrainingInstance> data) {
  ContextGroups groups;
  std::map<const Context*, std::size_t> slot;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Context* c = data[i].context.get();
    auto [it, inserted] = slot.emplace(c, groups.contexts.size());
    if (inserted) {
      groups.contexts.push_back(c);
      groups.members.emplace_back();
    }
    groups.members[it->second].push_back(i);
  }
  return groups;
}

inline std::size_t check_dataset(std::span<const TrainingInstance> data) {
  if (data.empty())
    throw InvalidInput("dataset is empty");
  std::size_t k = 0;
  for (const auto& inst : data) {
    check_instance(inst);
    if (k == 0)
      k = inst.context->num_features();
    if (inst.context->num_features() != k || k == 0)
      throw ShapeError("instances disagree on the number of features");
  }
  return k;
}

// Euclidean projection onto {lo <= x <= hi, sum(x) = 0}.
inline Vector project_box_sum_zero(const Vector& v, const Vector& lo, const Vector& hi) {
  const Index k = v.size();
  auto clamped_sum = [&](double tau) {
    double s = 0.0;
    for (Index i = 0; i < k; ++i)
      s += std::clamp(v(i) - tau, lo(i), hi(i));
    return s;
  };
  double a = (v - hi).minCoeff();  // clamped_sum(a) >= 0
  double b = (v - lo).maxCoeff();  // clamped_sum(b) <= 0
  for (int it = 0; it < 200 && b - a > 1e-17 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
    const double mid = 0.5 * (a + b);
    if (clamped_sum(mid) > 0.0)
      a = mid;
    else
      b = mid;
  }
  double tau = 0.5 * (a + b);
  // Exact tau for the free set found by bisection.
  double free_sum = 0.0, fixed_sum = 0.0;
  Index free_count = 0;
  for (Index i = 0; i < k; ++i) {
    const double y = v(i) - tau;
    if (y <= lo(i))
      fixed_sum += lo(i);
    else if (y >= hi(i))
      fixed_sum += hi(i);
    else {
      free_sum += v(i);
      ++free_count;
    }
  }
  if (free_count > 0)
    tau = (free_sum + fixed_sum) / static_cast<double>(free_count);
  Vector x(k);
  for (Index i = 0; i < k; ++i)
    x(i) = std::clamp(v(i) - tau, lo(i), hi(i));
  return x;
}

} // namespace detail

/// Residual and linearized sensitivities of one instance at native weights w.
inline LinearizedRow linearized_row(const TrainingInstance& instance, const WeightVector& w_native,
                                    double lambda) {
  detail::check_instance(instance);
  if (w_native.size() != instance.context->num_features())
    throw ShapeError("weight count does not match topology count");
  const auto lin = detail::linearize_context(*instance.context, w_native.to_native(lambda), lambda);
  const auto u = static_cast<Index>(instance.target_u);
  return {instance.target_prob - lin.stationary[u], lin.sensitivity.col(u)};
}

/// Box bounds of the step around native weights w.
inline std::pair<Vector, Vector> step_bounds(const WeightVector& weights, const LearnerConfig& cfg) {
  const WeightVector w_native = weights.to_native(cfg.lambda);
  const auto k = static_cast<Index>(w_native.size());
  Vector lo(k), hi(k);
  for (Index i = 0; i < k; ++i) {
    const double wi = w_native[static_cast<std::size_t>(i)];
    lo(i) = -std::min(cfg.eta, wi);
    hi(i) = std::max(0.0, std::min(cfg.eta, 1.0 - cfg.lambda - wi));
  }
  return {lo, hi};
}

/// Objective sum_q (residual_q - x . g_q)^2 of the step subproblem.
inline double step_objective(std::span<const LinearizedRow> rows, const Vector& x) {
  double f = 0.0;
  for (const auto& r : rows) {
    const double e = r.residual - r.gradient.dot(x);
    f += e * e;
  }
  return f;
}

/**
 * Bounded weight step: minimizes step_objective subject to
 * -min(eta, w_i) <= x_i <= min(eta, 1 - lambda - w_i) and sum(x) = 0.
 *
 * Gradient projection with exact line search, alternated with a Newton step
 * on the currently free coordinates. Starts from x = 0 (always feasible), so
 * the returned objective never exceeds the objective at zero.
 */
inline Vector solve_step(std::span<const LinearizedRow> rows, const WeightVector& w_native,
                         const LearnerConfig& cfg) {
  if (rows.empty())
    throw InvalidInput("solve_step needs at least one row");
  const auto k = static_cast<Index>(w_native.size());
  for (const auto& r : rows)
    if (r.gradient.size() != k)
      throw ShapeError("row gradient length does not match weight count");

  const auto [lo, hi] = step_bounds(w_native, cfg);
  if ((lo.array() > 0.0).any() || (hi.array() < 0.0).any() || (lo.array() > hi.array()).any())
    throw InternalError("step box does not contain zero");

  // Normal equations: f(x) = c - 2 b.x + x^T H x.
  Matrix H = Matrix::Zero(k, k);
  Vector b = Vector::Zero(k);
  for (const auto& r : rows) {
    H.noalias() += r.gradient * r.gradient.transpose();
    b.noalias() += r.residual * r.gradient;
  }
  auto quad = [&](const Vector& x) { return x.dot(H * x) - 2.0 * b.dot(x); };

  const double lipschitz = 2.0 * Eigen::SelfAdjointEigenSolver<Matrix>(H, Eigen::EigenvaluesOnly)
                                     .eigenvalues()
                                     .maxCoeff();
  Vector x = Vector::Zero(k);
  if (!(lipschitz > 0.0))
    return x;

  auto kkt_residual = [&](const Vector& y) {
    const Vector grad = 2.0 * (H * y - b);
    return (y - detail::project_box_sum_zero(y - grad, lo, hi)).cwiseAbs().maxCoeff();
  };
  // Exact minimizer of the quadratic along x + t d, t in [0, t_max].
  auto line_search = [&](const Vector& y, const Vector& d, double t_max) {
    const double curv = d.dot(H * d);
    const double slope = 2.0 * (H * y - b).dot(d);
    if (slope >= 0.0)
      return 0.0;
    if (curv <= 0.0)
      return t_max;
    return std::min(t_max, -slope / (2.0 * curv));
  };

  const double bound_tol = 1e-15;
  for (int iter = 0; iter < 10000; ++iter) {
    if (kkt_residual(x) <= cfg.qp_tol)
      break;

    // Gradient projection.
    const Vector grad = 2.0 * (H * x - b);
    const Vector d = detail::project_box_sum_zero(x - grad / lipschitz, lo, hi) - x;
    x += line_search(x, d, 1.0) * d;

    // Newton step on the free face {x_F free, sum = 0}.
    std::vector<Index> free;
    for (Index i = 0; i < k; ++i)
      if (x(i) > lo(i) + bound_tol && x(i) < hi(i) - bound_tol)
        free.push_back(i);
    if (free.size() < 2)
      continue;
    const auto m = static_cast<Index>(free.size());
    const Vector g = 2.0 * (H * x - b);
    Matrix kkt = Matrix::Zero(m + 1, m + 1);
    Vector rhs = Vector::Zero(m + 1);
    for (Index a = 0; a < m; ++a) {
      for (Index c = 0; c < m; ++c)
        kkt(a, c) = 2.0 * H(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(c)]);
      kkt(a, m) = kkt(m, a) = 1.0;
      rhs(a) = -g(free[static_cast<std::size_t>(a)]);
    }
    const Vector sol = kkt.completeOrthogonalDecomposition().solve(rhs);
    Vector dn = Vector::Zero(k);
    for (Index a = 0; a < m; ++a)
      dn(free[static_cast<std::size_t>(a)]) = sol(a);
    // Keep the direction exactly in the sum-zero plane.
    const double drift = dn.sum() / static_cast<double>(m);
    for (Index a = 0; a < m; ++a)
      dn(free[static_cast<std::size_t>(a)]) -= drift;

    double t_max = 1.0;
    for (Index i = 0; i < k; ++i) {
      if (dn(i) > 0.0)
        t_max = std::min(t_max, (hi(i) - x(i)) / dn(i));
      else if (dn(i) < 0.0)
        t_max = std::min(t_max, (lo(i) - x(i)) / dn(i));
    }
    t_max = std::max(0.0, t_max);
    const double t = line_search(x, dn, t_max);
    if (t > 0.0) {
      const Vector candidate = x + t * dn;
      if (quad(candidate) <= quad(x))
        x = candidate;
    }
  }
  // Re-project to clear accumulated round-off.
  return detail::project_box_sum_zero(x, lo, hi);
}

/// Mean |p_u - p*_u| over the dataset (the sample error) at reporting-form w.
inline double sample_error(std::span<const TrainingInstance> data, const WeightVector& w,
                           double lambda) {
  detail::check_dataset(data);
  const auto groups = detail::group_by_context(data);
  const WeightVector wr = w.to_reporting(lambda);
  double total = 0.0;
  for (std::size_t c = 0; c < groups.contexts.size(); ++c) {
    const Distribution p = stationary(combine(groups.contexts[c]->topologies, wr, lambda));
    for (std::size_t i : groups.members[c])
      total += std::abs(p[static_cast<Index>(data[i].target_u)] - data[i].target_prob);
  }
  return total / static_cast<double>(data.size());
}

namespace detail {

inline WeightVector apply_step(const WeightVector& w_native, const Vector& x, double lambda) {
  const double cap = 1.0 - lambda;
  std::vector<double> next(w_native.size());
  for (std::size_t i = 0; i < next.size(); ++i)
    next[i] = std::clamp(w_native[i] + x(static_cast<Index>(i)), 0.0, cap);
  // Return any round-off drift through the largest coordinate.
  double sum = 0.0;
  for (double v : next)
    sum += v;
  auto largest = std::max_element(next.begin(), next.end());
  *largest = std::clamp(*largest + (cap - sum), 0.0, cap);
  return WeightVector::native(std::move(next), lambda);
}

} // namespace detail

/// Iterative weight learner. Halts when the step's infinity norm drops to
/// halt_eps; otherwise stops after max_iters steps and returns the iterate
/// with the smallest sample error, flagged unconverged.
inline FitResult fit(std::span<const TrainingInstance> data, const LearnerConfig& cfg) {
  cfg.validate();
  const std::size_t k = detail::check_dataset(data);
  const double lambda = cfg.lambda;

  WeightVector w = cfg.init ? cfg.init->to_native(lambda)
                            : WeightVector::uniform(k).to_native(lambda);
  if (w.size() != k)
    throw ShapeError("initial weights have the wrong length");

  const auto groups = detail::group_by_context(data);
  std::vector<LinearizedRow> rows(data.size());

  FitResult result;
  WeightVector best = w;
  double best_err = std::numeric_limits<double>::infinity();

  for (;;) {
    parallel_for(groups.contexts.size(), cfg.threads, [&](std::size_t c) {
      const auto lin = detail::linearize_context(*groups.contexts[c], w, lambda);
      for (std::size_t i : groups.members[c]) {
        const auto u = static_cast<Index>(data[i].target_u);
        rows[i] = {data[i].target_prob - lin.stationary[u], lin.sensitivity.col(u)};
      }
    });
    double sq = 0.0, abs_sum = 0.0;
    for (const auto& r : rows) {
      sq += r.residual * r.residual;
      abs_sum += std::abs(r.residual);
    }
    const auto m = static_cast<double>(rows.size());
    result.per_iteration_loss.push_back(sq / m);
    result.per_iteration_err_s.push_back(abs_sum / m);
    if (abs_sum / m < best_err) {
      best_err = abs_sum / m;
      best = w;
    }

    if (result.iterations >= cfg.max_iters)
      break;
    const Vector x = solve_step(rows, w, cfg);
    ++result.iterations;
    result.final_step_norm = x.cwiseAbs().maxCoeff();
    if (result.final_step_norm <= cfg.halt_eps) {
      result.converged = true;
      break;
    }
    w = detail::apply_step(w, x, lambda);
  }

  result.weights = (result.converged ? w : best).to_reporting(lambda);
  return result;
}

/// Number of points on the simplex grid with `steps` increments per unit in
/// k coordinates, C(steps + k - 1, k - 1), saturating at SIZE_MAX.
inline std::size_t simplex_grid_size(std::size_t k, std::size_t steps) {
  if (k == 0)
    return 0;
  // C(steps + r, r) built up one factor at a time stays integral.
  long double count = 1.0L;
  std::size_t exact = 1;
  for (std::size_t r = 1; r < k; ++r) {
    count = count * static_cast<long double>(steps + r) / static_cast<long double>(r);
    if (count > static_cast<long double>(std::numeric_limits<std::size_t>::max() / 2))
      return std::numeric_limits<std::size_t>::max();
    exact = static_cast<std::size_t>(std::llround(count));
  }
  return exact;
}

/**
 * Brute-force learner: evaluates the sample error at every point of the
 * simplex grid with spacing grid_step and returns the minimizer (reporting
 * form). Points are visited in lexicographic order and ties keep the first.
 */
inline WeightVector grid_search(std::span<const TrainingInstance> data, double grid_step,
                                double lambda, std::size_t cap = tolerances::grid_cap) {
  if (!(lambda > 0.0 && lambda < 1.0))
    throw ConfigError("lambda must lie in (0, 1)");
  if (!(grid_step > 0.0 && grid_step <= 1.0))
    throw ConfigError("grid_step must lie in (0, 1]");
  const auto steps = static_cast<std::size_t>(std::llround(1.0 / grid_step));
  if (std::abs(static_cast<double>(steps) * grid_step - 1.0) > 1e-9)
    throw ConfigError("1 / grid_step must be an integer");
  const std::size_t k = detail::check_dataset(data);
  const std::size_t required = simplex_grid_size(k, steps);
  if (required > cap)
    throw GridBudgetExceeded(required, cap);

  const auto groups = detail::group_by_context(data);
  std::vector<std::size_t> counts(k, 0);
  std::optional<WeightVector> best;
  double best_err = std::numeric_limits<double>::infinity();

  // counts[0..k-2] enumerate lexicographically; the last takes the remainder.
  auto evaluate = [&] {
    std::vector<double> w(k);
    for (std::size_t i = 0; i < k; ++i)
      w[i] = static_cast<double>(counts[i]) / static_cast<double>(steps);
    const WeightVector wv = WeightVector::reporting(std::move(w));
    double total = 0.0;
    for (std::size_t c = 0; c < groups.contexts.size(); ++c) {
      const Distribution p = stationary(combine(groups.contexts[c]->topologies, wv, lambda));
      for (std::size_t i : groups.members[c])
        total += std::abs(p[static_cast<Index>(data[i].target_u)] - data[i].target_prob);
    }
    const double err = total / static_cast<double>(data.size());
    if (err < best_err) {
      best_err = err;
      best = wv;
    }
  };

  auto recurse = [&](auto&& self, std::size_t pos, std::size_t remaining) -> void {
    if (pos + 1 == k) {
      counts[pos] = remaining;
      evaluate();
      return;
    }
    for (std::size_t c = 0; c <= remaining; ++c) {
      counts[pos] = c;
      self(self, pos + 1, remaining - c);
    }
  };
  recurse(recurse, 0, steps);
  return *best;
}

/// Order-of-magnitude sample size ceil((k / eps^2) ln(k / (lambda eps delta)))
/// for uniform convergence of the sample error, with the constant set to 1.
inline std::size_t sample_bound(std::size_t k, double eps, double delta, double lambda) {
  if (k == 0 || !(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0) ||
      !(lambda > 0.0 && lambda < 1.0))
    throw ConfigError("sample_bound: need k > 0 and eps, delta, lambda in (0, 1)");
  const auto kd = static_cast<double>(k);
  return static_cast<std::size_t>(std::ceil(kd / (eps * eps) * std::log(kd / (lambda * eps * delta))));
}

} // namespace rsm

#endif // RSM_LEARNER_HPP
