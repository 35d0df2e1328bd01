#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "numax/utility.hpp"

namespace numax {

/// One power-allocation instance for a fixed subcarrier assignment:
/// subcarrier k has SNR coefficient beta[k] and carries the utility of its
/// owner. Utilities must satisfy the criterion (see `validate`).
struct AllocationProblem {
  std::vector<double> beta;
  std::vector<std::reference_wrapper<const UtilityModel>> utility;
  double budget = 1.0;  ///< total power, W

  std::size_t size() const noexcept { return beta.size(); }
};

struct AllocationOptions {
  double tol = 1e-8;
  int max_outer = 200;
  int max_inner = 100;
  /// Take Newton steps inside the bisection brackets when they land inside
  /// them. Without it both levels are plain bisection.
  bool newton = true;
  /// Starting guess for nu, e.g. the previous solution of a slowly varying
  /// problem. Ignored when not in (0, largest marginal at zero power).
  std::optional<double> nu_hint;
};

struct AllocationResult {
  std::vector<double> powers;
  double nu = 0.0;
  double objective = 0.0;
  int iterations = 0;
  double residual = 0.0;  ///< budget - sum(powers)
  bool converged = true;  ///< false when the iteration cap was hit
};

/// beta f'(ln(1 + beta p)) / (1 + beta p): the derivative of the
/// subcarrier's utility with respect to its power.
double marginal(const UtilityModel& u, double beta, double p) noexcept;

/// Runs criterion_check on every distinct utility; throws
/// NonCompliantUtility on the first failure.
void validate(const AllocationProblem& problem);

/// Solves the KKT system by an outer search on the budget multiplier nu and
/// an inner per-subcarrier search for marginal_k(p) = nu. The returned
/// powers always satisfy sum(p) <= budget. Throws NonCompliantUtility when a
/// marginal is found to increase with power.
AllocationResult kkt_allocate(const AllocationProblem& problem, const AllocationOptions& options = {});

/// Exact active-set waterfilling for f(x) = x. Throws AllZeroChannels when
/// no beta is positive.
AllocationResult waterfill(std::span<const double> betas, double budget);

/// sum_k f_k(ln(1 + beta_k p_k)).
double objective(const AllocationProblem& problem, std::span<const double> powers);

/// Best point of the grid {p : p_k = j_k * step, sum p <= budget}. Exact
/// over the grid (the objective is separable, so the search runs as a
/// max-plus convolution). Throws TooLarge for more than 4 subcarriers.
AllocationResult brute_force_oracle(const AllocationProblem& problem, double grid_step);

}  // namespace numax
