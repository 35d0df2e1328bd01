#pragma once

#include <cstddef>
#include <vector>

#include "numax/channel.hpp"
#include "numax/utility.hpp"

namespace numax {

/// FDMA subcarrier assignment: every subcarrier belongs to exactly one user.
struct Partition {
  std::vector<std::size_t> owner;             ///< owner[k] = i(k)
  std::vector<std::vector<std::size_t>> sets;  ///< sets[i] = D_i, ascending

  static Partition from_owners(std::vector<std::size_t> owner, std::size_t n_users);

  /// Exact cover, disjointness and owner/set agreement. Throws
  /// InvariantViolation describing the first inconsistency.
  void validate(std::size_t n_users) const;
};

/// owner(k) = argmax_i beta(i, k); ties go to the lowest user index.
Partition assign_best_channel(const BetaMatrix& beta);

/// Greedy utility-aware assignment. Subcarriers are visited in descending
/// order of their best beta; each goes to the user whose utility of the
/// aggregate rate (equal power split of `budget`) grows the most by taking
/// it. Utilities take aggregate rate in nats/symbol.
Partition assign_utility_aware(const BetaMatrix& beta, const std::vector<const UtilityModel*>& utilities,
                               double budget);

}  // namespace numax
