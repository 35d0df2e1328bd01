#include "numax/power_alloc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "numax/error.hpp"

namespace numax {

double marginal(const UtilityModel& u, double beta, double p) noexcept {
  if (beta == 0.0) return 0.0;
  const double q = 1.0 + beta * p;
  return beta * u.slope(std::log1p(beta * p)) / q;
}

void validate(const AllocationProblem& problem) {
  std::vector<const UtilityModel*> seen;
  for (const auto& ref : problem.utility) {
    const UtilityModel* u = &ref.get();
    if (std::find(seen.begin(), seen.end(), u) != seen.end()) continue;
    seen.push_back(u);
    const auto report = criterion_check(*u);
    if (!report.passed)
      throw Error(Errc::NonCompliantUtility, "f' - f'' = " + std::to_string(report.worst_margin) +
                                                 " at x = " + std::to_string(report.worst_x));
  }
}

double objective(const AllocationProblem& problem, std::span<const double> powers) {
  double total = 0.0;
  for (std::size_t k = 0; k < problem.size(); ++k)
    total += problem.utility[k].get().value(std::log1p(problem.beta[k] * powers[k]));
  return total;
}

namespace {

void check_problem(const AllocationProblem& problem) {
  if (problem.beta.size() != problem.utility.size())
    throw Error(Errc::InvalidParams, "beta and utility lists differ in length");
  if (!(problem.budget > 0.0) || !std::isfinite(problem.budget))
    throw Error(Errc::InvalidParams, "power budget must be positive");
  for (double b : problem.beta)
    if (!(b >= 0.0) || !std::isfinite(b)) throw Error(Errc::InvalidParams, "beta must be finite and >= 0");
}

struct Carrier {
  double beta;
  const UtilityModel* u;
  double m0;  // marginal at p = 0
  double mb;  // marginal at p = budget
};

[[noreturn]] void non_compliant(std::size_t k) {
  throw Error(Errc::NonCompliantUtility, "marginal utility increases with power on subcarrier " + std::to_string(k));
}

// d(marginal)/dp and marginal at p.
std::pair<double, double> marginal_and_slope(const Carrier& c, double p) noexcept {
  const double bp = c.beta * p;
  const double q = 1.0 + bp;
  // log(q) is as accurate as log1p once bp is not small, and much cheaper.
  const auto d = c.u->derivatives(bp > 0.5 ? std::log(q) : std::log1p(bp));
  return {c.beta * d.d1 / q, c.beta * c.beta / (q * q) * (d.d2 - d.d1)};
}

// Relative step size at which the inner search stops; tight enough that the
// total power resolves well below the outer tolerance.
constexpr double kStepTol = 1e-13;

struct InnerResult {
  double p;
  double slope;  // d(marginal)/dp at p; 0 when p sits on a bound
  int iterations;
};

// Solves marginal_k(p) = nu on [0, budget].
InnerResult solve_power(const Carrier& c, std::size_t k, double nu, double budget, double guess,
                        const AllocationOptions& opt) {
  if (c.m0 <= nu) return {0.0, 0.0, 0};
  if (c.mb >= nu) return {budget, 0.0, 0};

  double lo = 0.0, hi = budget;
  double phi_lo = c.m0 - nu, phi_hi = c.mb - nu;
  const double slack = 1e-9 * (std::abs(c.m0) + std::abs(nu)) + 1e-300;
  double p = (opt.newton && guess > lo && guess < hi) ? guess : 0.5 * (lo + hi);
  double slope = 0.0;
  int it = 0;
  for (; it < opt.max_inner; ++it) {
    const auto [m, dm] = marginal_and_slope(c, p);
    const double phi = m - nu;
    if (phi > phi_lo + slack || phi < phi_hi - slack || dm > slack) non_compliant(k);
    slope = dm;
    if (phi == 0.0) return {p, slope, it + 1};
    if (phi > 0.0) {
      lo = p;
      phi_lo = phi;
    } else {
      hi = p;
      phi_hi = phi;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
    const double newton = dm < 0.0 ? p - phi / dm : std::numeric_limits<double>::quiet_NaN();
    const double next = (opt.newton && newton > lo && newton < hi) ? newton : 0.5 * (lo + hi);
    if (std::abs(next - p) <= kStepTol * (p + 1.0 / c.beta)) return {next, slope, it + 1};
    p = next;
  }
  const double mid = 0.5 * (lo + hi);
  return {mid, marginal_and_slope(c, mid).second, it};
}

struct Sweep {
  std::vector<double> p;
  double sum = 0.0;
  double dsum_dnu = 0.0;  // sum over interior carriers of 1 / marginal'
  int inner_iterations = 0;
};

void evaluate_at(const std::vector<Carrier>& carriers, double nu, double budget, const AllocationOptions& opt,
                 const std::vector<double>& guess, Sweep& out) {
  out.p.resize(carriers.size());
  out.sum = 0.0;
  out.dsum_dnu = 0.0;
  for (std::size_t k = 0; k < carriers.size(); ++k) {
    const auto r = solve_power(carriers[k], k, nu, budget, guess.empty() ? -1.0 : guess[k], opt);
    out.p[k] = r.p;
    out.sum += r.p;
    if (r.slope < 0.0) out.dsum_dnu += 1.0 / r.slope;
    out.inner_iterations += r.iterations;
  }
}

AllocationResult finish(const AllocationProblem& problem, std::vector<double> powers, double nu, int iterations,
                        bool converged) {
  AllocationResult r;
  r.powers = std::move(powers);
  r.nu = nu;
  r.iterations = iterations;
  r.converged = converged;
  r.objective = objective(problem, r.powers);
  r.residual = problem.budget - std::accumulate(r.powers.begin(), r.powers.end(), 0.0);
  return r;
}

}  // namespace

AllocationResult kkt_allocate(const AllocationProblem& problem, const AllocationOptions& opt) {
  check_problem(problem);
  if (!(opt.tol > 0.0)) throw Error(Errc::InvalidParams, "tolerance must be positive");
  const double budget = problem.budget;
  const std::size_t n = problem.size();
  if (n == 0) return finish(problem, {}, 0.0, 0, true);

  std::vector<Carrier> carriers(n);
  double nu_max = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    Carrier& c = carriers[k];
    c.beta = problem.beta[k];
    c.u = &problem.utility[k].get();
    c.m0 = marginal(*c.u, c.beta, 0.0);
    c.mb = marginal(*c.u, c.beta, budget);
    if (!std::isfinite(c.m0) || !std::isfinite(c.mb))
      throw Error(Errc::EvaluationFailure, "non-finite marginal on subcarrier " + std::to_string(k));
    if (c.mb > c.m0 + 1e-9 * std::abs(c.m0) + 1e-300) non_compliant(k);
    nu_max = std::max(nu_max, c.m0);
  }
  // Nothing gains from power: any feasible point is optimal.
  if (nu_max <= 0.0) return finish(problem, std::vector<double>(n, 0.0), 0.0, 0, true);

  const double target = budget - 0.5 * std::min(opt.tol, budget);
  const double floor = budget - opt.tol;

  // At nu = 0 a carrier whose marginal stays non-negative up to the budget
  // takes all of it, so the interior case needs a sweep only otherwise.
  const bool saturates = std::any_of(carriers.begin(), carriers.end(), [](const Carrier& c) { return c.mb >= 0.0; });
  if (!saturates) {
    Sweep at_zero;
    evaluate_at(carriers, 0.0, budget, opt, {}, at_zero);
    if (at_zero.sum <= target) return finish(problem, std::move(at_zero.p), 0.0, 1, true);
  }

  // Search on the water level w = 1/nu, where the total power is close to
  // linear. Invariant: sum(w_lo) <= target < sum(w_hi).
  double w_lo = 1.0 / nu_max;
  Sweep lo_sweep;
  lo_sweep.p.assign(n, 0.0);
  double sum_lo = 0.0;

  double inv_beta = 0.0;
  std::size_t active = 0;
  for (const auto& c : carriers)
    if (c.m0 > 0.0 && c.beta > 0.0) {
      inv_beta += 1.0 / c.beta;
      ++active;
    }
  double w = std::max(w_lo * 2.0, (budget + inv_beta) / static_cast<double>(std::max<std::size_t>(active, 1)));
  if (opt.nu_hint && *opt.nu_hint > 0.0 && *opt.nu_hint < nu_max) w = 1.0 / *opt.nu_hint;
  double w_hi = std::numeric_limits<double>::infinity();

  Sweep cur;
  // First inner guesses from the linear-utility water level.
  std::vector<double> guess(n);
  for (std::size_t k = 0; k < n; ++k)
    guess[k] = carriers[k].beta > 0.0 ? std::clamp(w - 1.0 / carriers[k].beta, 0.0, budget) : 0.0;
  int iterations = 1;
  bool converged = false;
  for (; iterations < opt.max_outer; ++iterations) {
    evaluate_at(carriers, 1.0 / w, budget, opt, guess, cur);
    if (cur.sum <= budget && cur.sum >= floor) {
      lo_sweep = cur;
      sum_lo = cur.sum;
      w_lo = w;
      converged = true;
      ++iterations;
      break;
    }
    if (cur.sum <= target) {
      w_lo = w;
      sum_lo = cur.sum;
      lo_sweep = cur;
    } else {
      w_hi = w;
    }
    guess = cur.p;

    // dS/dw = dS/dnu * dnu/dw = (sum 1/marginal') * (-1/w^2) > 0.
    const double ds_dw = -cur.dsum_dnu / (w * w);
    const double newton = ds_dw > 0.0 ? w - (cur.sum - target) / ds_dw : std::numeric_limits<double>::quiet_NaN();

    if (!std::isfinite(w_hi)) {
      // No upper bracket yet: step twice the Newton distance so the next
      // point most likely brackets the target; double without Newton.
      w = (opt.newton && newton > w) ? w + 2.0 * (newton - w) : 2.0 * w;
      continue;
    }
    if (w_hi - w_lo <= 4.0 * std::numeric_limits<double>::epsilon() * w_hi) break;
    w = (opt.newton && newton > w_lo && newton < w_hi) ? newton : 0.5 * (w_lo + w_hi);
  }
  if (!converged) converged = sum_lo >= floor;
  double nu = 1.0 / w_lo;
  // A carrier holding the whole budget pins nu to its own marginal there;
  // the plateau of nu values giving the same powers is otherwise ambiguous.
  for (std::size_t k = 0; k < n; ++k)
    if (lo_sweep.p[k] == budget) nu = carriers[k].mb;
  return finish(problem, std::move(lo_sweep.p), nu, iterations, converged);
}

AllocationResult waterfill(std::span<const double> betas, double budget) {
  if (!(budget > 0.0) || !std::isfinite(budget)) throw Error(Errc::InvalidParams, "power budget must be positive");
  std::vector<std::size_t> order;
  for (std::size_t k = 0; k < betas.size(); ++k) {
    if (!(betas[k] >= 0.0) || !std::isfinite(betas[k])) throw Error(Errc::InvalidParams, "beta must be finite and >= 0");
    if (betas[k] > 0.0) order.push_back(k);
  }
  if (order.empty()) throw Error(Errc::AllZeroChannels, "every beta is zero");
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return betas[a] > betas[b]; });

  // Grow the active set while the weakest active carrier still gets power.
  double inv_sum = 0.0;
  double level = 0.0;
  std::size_t active = 0;
  int trials = 0;
  for (std::size_t n = 1; n <= order.size(); ++n) {
    ++trials;
    const double inv = 1.0 / betas[order[n - 1]];
    const double candidate = (budget + inv_sum + inv) / static_cast<double>(n);
    if (candidate <= inv) break;
    inv_sum += inv;
    level = candidate;
    active = n;
  }

  AllocationResult r;
  r.powers.assign(betas.size(), 0.0);
  for (std::size_t i = 0; i < active; ++i) r.powers[order[i]] = level - 1.0 / betas[order[i]];
  r.nu = 1.0 / level;
  r.iterations = trials;
  double used = 0.0;
  for (std::size_t k = 0; k < betas.size(); ++k) {
    r.objective += std::log1p(betas[k] * r.powers[k]);
    used += r.powers[k];
  }
  r.residual = budget - used;
  return r;
}

AllocationResult brute_force_oracle(const AllocationProblem& problem, double grid_step) {
  check_problem(problem);
  const std::size_t n = problem.size();
  if (n > 4) throw Error(Errc::TooLarge, "grid oracle handles at most 4 subcarriers");
  if (!(grid_step > 0.0)) throw Error(Errc::InvalidParams, "grid step must be positive");
  if (n == 0) return finish(problem, {}, 0.0, 0, true);

  const auto steps = static_cast<std::size_t>(std::floor(problem.budget / grid_step * (1.0 + 1e-12)));
  const std::size_t m = steps + 1;

  // value[k][j] = f_k(ln(1 + beta_k j step))
  std::vector<std::vector<double>> value(n, std::vector<double>(m));
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t j = 0; j < m; ++j)
      value[k][j] = problem.utility[k].get().value(std::log1p(problem.beta[k] * grid_step * static_cast<double>(j)));

  // best[k][s]: best total of carriers 0..k using at most s steps; pick[k][s]
  // the steps given to carrier k there.
  std::vector<std::vector<double>> best(n, std::vector<double>(m));
  std::vector<std::vector<std::size_t>> pick(n, std::vector<std::size_t>(m));
  for (std::size_t s = 0; s < m; ++s) {
    best[0][s] = value[0][s];
    pick[0][s] = s;
    if (s > 0 && best[0][s - 1] >= best[0][s]) {
      best[0][s] = best[0][s - 1];
      pick[0][s] = pick[0][s - 1];
    }
  }
  for (std::size_t k = 1; k < n; ++k) {
    for (std::size_t s = 0; s < m; ++s) {
      double top = -std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t j = 0; j <= s; ++j) {
        const double v = value[k][j] + best[k - 1][s - j];
        if (v > top) {
          top = v;
          arg = j;
        }
      }
      best[k][s] = top;
      pick[k][s] = arg;
    }
  }

  std::vector<double> powers(n, 0.0);
  std::size_t s = steps;
  for (std::size_t k = n; k-- > 0;) {
    const std::size_t j = pick[k][s];
    powers[k] = grid_step * static_cast<double>(j);
    s -= j;
  }
  auto r = finish(problem, std::move(powers), 0.0, static_cast<int>(n * m), true);
  return r;
}

}  // namespace numax
