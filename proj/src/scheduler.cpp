#include "numax/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "numax/error.hpp"

namespace numax {

Partition Partition::from_owners(std::vector<std::size_t> owner, std::size_t n_users) {
  Partition p;
  p.sets.resize(n_users);
  for (std::size_t k = 0; k < owner.size(); ++k) {
    if (owner[k] >= n_users) throw Error(Errc::InvariantViolation, "owner index out of range");
    p.sets[owner[k]].push_back(k);
  }
  p.owner = std::move(owner);
  return p;
}

void Partition::validate(std::size_t n_users) const {
  if (sets.size() != n_users) throw Error(Errc::InvariantViolation, "partition has the wrong number of users");
  std::vector<int> seen(owner.size(), 0);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (std::size_t k : sets[i]) {
      if (k >= owner.size()) throw Error(Errc::InvariantViolation, "subcarrier index out of range");
      if (seen[k]++ != 0) throw Error(Errc::InvariantViolation, "subcarrier " + std::to_string(k) + " assigned twice");
      if (owner[k] != i)
        throw Error(Errc::InvariantViolation, "owner of subcarrier " + std::to_string(k) + " disagrees with sets");
    }
  }
  for (std::size_t k = 0; k < seen.size(); ++k)
    if (seen[k] != 1) throw Error(Errc::InvariantViolation, "subcarrier " + std::to_string(k) + " unassigned");
}

Partition assign_best_channel(const BetaMatrix& beta) {
  const std::size_t n = beta.users();
  const std::size_t k_count = beta.subcarriers();
  if (n == 0) throw Error(Errc::InvalidParams, "cannot assign subcarriers without users");
  std::vector<std::size_t> owner(k_count, 0);
  std::vector<double> best(k_count);
  for (std::size_t k = 0; k < k_count; ++k) best[k] = beta(0, k);
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t k = 0; k < k_count; ++k) {
      const double b = beta(i, k);
      if (b > best[k]) {
        best[k] = b;
        owner[k] = i;
      }
    }
  }
  return Partition::from_owners(std::move(owner), n);
}

Partition assign_utility_aware(const BetaMatrix& beta, const std::vector<const UtilityModel*>& utilities,
                               double budget) {
  const std::size_t n = beta.users();
  const std::size_t k_count = beta.subcarriers();
  if (n == 0) throw Error(Errc::InvalidParams, "cannot assign subcarriers without users");
  if (utilities.size() != n) throw Error(Errc::InvalidParams, "need one utility per user");
  if (k_count == 0) return Partition::from_owners({}, n);
  const double p_equal = budget / static_cast<double>(k_count);

  std::vector<double> top(k_count, 0.0);
  for (std::size_t k = 0; k < k_count; ++k)
    for (std::size_t i = 0; i < n; ++i) top[k] = std::max(top[k], beta(i, k));
  std::vector<std::size_t> order(k_count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return top[a] > top[b]; });

  std::vector<double> rate(n, 0.0);
  std::vector<double> current(n);
  for (std::size_t i = 0; i < n; ++i) current[i] = utilities[i]->value(0.0);

  std::vector<std::size_t> owner(k_count, 0);
  for (std::size_t k : order) {
    std::size_t pick = 0;
    double gain_best = -std::numeric_limits<double>::infinity();
    double rate_best = 0.0, value_best = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double bp = beta(i, k) * p_equal;
      const double r = rate[i] + (bp > 0.5 ? std::log(1.0 + bp) : std::log1p(bp));
      const double v = utilities[i]->value(r);
      const double gain = v - current[i];
      if (gain > gain_best) {
        gain_best = gain;
        pick = i;
        rate_best = r;
        value_best = v;
      }
    }
    owner[k] = pick;
    rate[pick] = rate_best;
    current[pick] = value_best;
  }
  return Partition::from_owners(std::move(owner), n);
}

}  // namespace numax
