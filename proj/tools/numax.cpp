// Command-line front end: utility checks, single allocations, simulations
// and parameter sweeps.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "numax/config.hpp"
#include "numax/error.hpp"
#include "numax/power_alloc.hpp"
#include "numax/simulation.hpp"

namespace {

using namespace numax;

std::string g9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

ServiceClass parse_class(const std::string& name) {
  for (auto cls : kServiceClasses)
    if (name == to_string(cls)) return cls;
  throw Error(Errc::ConfigError, "unknown class '" + name + "' (voip, video, be)");
}

void print_allocation(const std::vector<double>& beta, const AllocationResult& r) {
  std::cout << "subcarrier,beta,power\n";
  for (std::size_t k = 0; k < beta.size(); ++k) std::cout << k << ',' << g9(beta[k]) << ',' << g9(r.powers[k]) << '\n';
  std::cout << "nu," << g9(r.nu) << '\n';
  std::cout << "objective," << g9(r.objective) << '\n';
  std::cout << "iterations," << r.iterations << '\n';
}

// Writes to `path`, or stdout for "-".
template <typename F>
void with_output(const std::string& path, F&& write) {
  if (path == "-") {
    write(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::ConfigError, "cannot write '" + path + "'");
  write(out);
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  if (text.empty()) return out;
  for (double v : parse_number_list(text)) {
    if (v != static_cast<int>(v)) throw Error(Errc::ConfigError, "sweep values must be integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Utility-based OFDMA resource allocation toolkit"};
  app.require_subcommand(1);

  std::string config_path, check_class, alloc_class, beta_text, out_path = "-", param, values_text;
  double budget = 1.0;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int seeds = 5;
  unsigned jobs = 0;

  auto* check = app.add_subcommand("check-utility", "Check each class utility against the convexity criterion");
  check->add_option("--config", config_path, "Scenario config")->required();
  check->add_option("--class", check_class, "Only this class (voip, video, be)");

  auto* wf = app.add_subcommand("waterfill", "Waterfilling allocation for a linear utility");
  wf->add_option("--beta", beta_text, "Comma-separated SNR coefficients")->required();
  wf->add_option("--budget", budget, "Total power")->required();

  auto* alloc = app.add_subcommand("allocate", "KKT allocation with a class utility on every subcarrier");
  alloc->add_option("--config", config_path, "Scenario config")->required();
  alloc->add_option("--beta", beta_text, "Comma-separated SNR coefficients")->required();
  alloc->add_option("--budget", budget, "Total power")->required();
  alloc->add_option("--class", alloc_class, "Class whose utility is used")->default_val("be");

  auto* sim = app.add_subcommand("simulate", "Run one scenario and write per-window metrics");
  sim->add_option("--config", config_path, "Scenario config")->required();
  sim->add_option("--seed", seed, "Overrides sim.seed");
  sim->add_option("--out", out_path, "Output CSV ('-' for stdout)")->default_val("-");

  auto* sw = app.add_subcommand("sweep", "Sweep a user count over several seeds");
  sw->add_option("--config", config_path, "Scenario config")->required();
  sw->add_option("--param", param, "traffic.<class>.users")->required();
  sw->add_option("--values", values_text, "Comma-separated user counts")->required();
  sw->add_option("--seeds", seeds, "Seeds per value")->default_val(5);
  sw->add_option("--out", out_path, "Output CSV ('-' for stdout)")->default_val("-");
  sw->add_option("--jobs", jobs, "Worker threads (0 = all cores)")->default_val(0);

  CLI11_PARSE(app, argc, argv);
  seed_given = sim->count("--seed") > 0;

  try {
    if (*check) {
      const auto cfg = load_config(config_path);
      const auto utilities = build_class_utilities(cfg);
      std::cout << "class,view,passed,worst_x,worst_margin,shape\n";
      for (auto cls : kServiceClasses) {
        if (!check_class.empty() && parse_class(check_class) != cls) continue;
        const auto& uc = cfg.utility[class_index(cls)];
        const UtilityModel base = make_utility(utility_spec_from(uc.kind, uc.params));
        const auto& cu = utilities[class_index(cls)];
        const std::pair<const char*, const UtilityModel*> views[] = {{"family", &base},
                                                                      {"subcarrier", &cu.optimizer}};
        for (const auto& [view, model] : views) {
          const auto r = criterion_check(*model);
          std::cout << to_string(cls) << ',' << view << ',' << (r.passed ? "true" : "false") << ','
                    << g9(r.worst_x) << ',' << g9(r.worst_margin) << ',' << to_string(r.shape_class) << '\n';
        }
      }
    } else if (*wf) {
      const auto beta = parse_number_list(beta_text);
      print_allocation(beta, waterfill(beta, budget));
    } else if (*alloc) {
      const auto cfg = load_config(config_path);
      const auto utilities = build_class_utilities(cfg);
      const UtilityModel& u = utilities[class_index(parse_class(alloc_class))].optimizer;
      AllocationProblem problem;
      problem.beta = parse_number_list(beta_text);
      problem.budget = budget;
      for (std::size_t k = 0; k < problem.beta.size(); ++k) problem.utility.emplace_back(u);
      print_allocation(problem.beta, kkt_allocate(problem, cfg.alloc));
    } else if (*sim) {
      auto cfg = load_config(config_path);
      if (seed_given) cfg.seed = seed;
      const auto result = run_scenario(cfg);
      with_output(out_path, [&](std::ostream& os) { write_metrics_csv(os, result.records); });
    } else if (*sw) {
      const auto cfg = load_config(config_path);
      const auto result = sweep(cfg, param, parse_int_list(values_text), seeds, jobs);
      with_output(out_path, [&](std::ostream& os) { write_sweep_csv(os, result.rows); });
    }
  } catch (const Error& e) {
    std::cerr << "numax: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
