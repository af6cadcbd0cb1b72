#ifndef RSM_TOLERANCES_HPP
#define RSM_TOLERANCES_HPP

#include <cstddef>

// Numerical tolerances shared by every module.
namespace rsm::tolerances {

inline constexpr double row_sum = 1e-12;          // stochastic rows / distributions
inline constexpr double stationary_residual = 1e-10;  // |p^T P - p^T|_inf
inline constexpr double fundamental_residual = 1e-8;  // |Z (I - P + 1p^T) - I|_max
inline constexpr double power_iteration = 1e-12;
inline constexpr std::size_t power_iteration_cap = 1'000'000;
inline constexpr std::size_t direct_solve_max_n = 64;

// Scores closer than this are treated as tied when ordering items.
inline constexpr double rank_tie = 1e-12;

inline constexpr double ridge = 1e-8;
inline constexpr std::size_t grid_cap = 1'000'000;

} // namespace rsm::tolerances

#endif // RSM_TOLERANCES_HPP
