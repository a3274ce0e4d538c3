#include "ceri/cli.hpp"

#include "ceri/report.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

namespace ceri {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string resolve(const CommandContext& ctx, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.is_absolute() || ctx.base_dir.empty()) return path;
  return (ctx.base_dir / p).string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

struct Seeded {
  std::uint64_t seed = 0;
  std::string source;
};

Seeded pick_seed(const std::optional<std::uint64_t>& flag, const Scenario* scenario) {
  if (flag) return {*flag, "command line"};
  if (scenario && scenario->seed) return {*scenario->seed, "scenario"};
  std::random_device device;
  const std::uint64_t seed = (static_cast<std::uint64_t>(device()) << 32) ^ device();
  return {seed, "generated"};
}

void put_seed(Json& report, const Seeded& s) {
  report["seed"] = s.seed;
  report["seed_source"] = s.source;
}

std::vector<BudgetDistribution> require_budgets(const Scenario& s) {
  if (s.budgets.empty()) throw UsageError("the scenario has no budgets");
  return s.budgets;
}

Json error_json(const Error& err) {
  Json out = Json::object();
  out["code"] = to_string(err.code());
  out["message"] = err.what();
  if (const auto* scenario = dynamic_cast<const ScenarioError*>(&err)) {
    Json issues = Json::array();
    for (const auto& issue : scenario->issues()) {
      issues.push_back(
          Json{{"path", issue.path}, {"line", issue.line}, {"column", issue.column}, {"message", issue.message}});
    }
    out["source"] = scenario->source();
    out["issues"] = issues;
  }
  return out;
}

// Misreports file: {"misreports": "unit-demand"} (every ranking of single
// goods, for every agent) or one list of rankings per agent, each ranking a
// list of {good: count} bundles.
std::vector<std::vector<AgentPreference>> read_misreports(const std::string& path, const Economy& e) {
  const Json root = Json::parse(read_file(path));
  if (!root.contains("misreports")) throw UsageError(path + ": expected a misreports key");
  const Json& m = root["misreports"];
  if (m.is_string()) {
    const std::string kind = m.get<std::string>();
    if (kind != "unit-demand" && kind != "unit-demand-full") throw UsageError(path + ": unknown misreport family");
    const auto all = unit_demand_rankings(e.num_goods(), kind == "unit-demand-full");
    return std::vector<std::vector<AgentPreference>>(e.num_agents(), all);
  }
  if (!m.is_array() || static_cast<int>(m.size()) != e.num_agents()) {
    throw UsageError(path + ": expected one list of rankings per agent");
  }
  std::vector<std::vector<AgentPreference>> out(e.num_agents());
  for (int i = 0; i < e.num_agents(); ++i) {
    for (const auto& ranking : m[i]) {
      AgentPreference p;
      p.name = e.agents[i].name;
      for (const auto& bundle : ranking) {
        Bundle x = Bundle::Zero(e.num_goods());
        for (auto it = bundle.begin(); it != bundle.end(); ++it) {
          int j = 0;
          while (j < e.num_goods() && e.good_name(j) != it.key()) ++j;
          if (j == e.num_goods()) throw UsageError(path + ": unknown good " + it.key());
          x[j] = it.value().get<int>();
        }
        p.ranked.push_back(x);
      }
      out[i].push_back(std::move(p));
    }
  }
  return out;
}

std::vector<int> identity_order(int n) {
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  return order;
}

std::vector<int> random_order(int n, std::uint64_t seed) {
  std::vector<int> order = identity_order(n);
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i) std::swap(order[i], order[uniform_below(rng, static_cast<std::uint64_t>(i + 1))]);
  return order;
}

Json ceri_form_json(const Economy& e, const CeriForm& form, const LotteryAllocation& allocation, bool& failed) {
  const CeriReport check = verify_ceri(e, form.budgets, form.prices, allocation);
  failed = failed || !check.is_ceri;
  return Json{{"prices", prices_to_json(e, form.prices)},
              {"budgets", budgets_to_json(form.budgets)},
              {"is_ceri", check.is_ceri},
              {"violations", violations_to_json(check.violations)}};
}

struct Options {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::optional<int> max_iters;
  std::string method = "auto";
  std::optional<int> kappa;
  std::string allocation;
  std::string checks = "efficiency,envy,ef1,ceri";
  std::string mechanism;
  std::optional<double> epsilon;
  std::vector<int> order;
  long lambda = 0;
  std::string misreports;
  long samples = 200;
  int tau = 1;
  long trials = 10000;
  std::string dir = "scenarios";
  bool update = false;
  bool timings = false;
};

DecomposeMethod parse_method(const std::string& name) {
  if (name == "auto") return DecomposeMethod::kAuto;
  if (name == "rounding") return DecomposeMethod::kIterativeRounding;
  if (name == "enumeration") return DecomposeMethod::kEnumeration;
  throw UsageError("unknown decomposition method " + name);
}

SolverConfig solver_for(const Scenario& s, const Options& o) {
  SolverConfig cfg = s.solver.apply({});
  if (o.tol) cfg.tol_clearing = cfg.tol_slackness = *o.tol;
  if (o.max_iters) cfg.max_iters = *o.max_iters;
  return cfg;
}

int cmd_solve(const Options& o, const CommandContext& ctx, Json& report) {
  const Scenario s = parse_scenario(resolve(ctx, o.scenario));
  const auto budgets = require_budgets(s);
  SolverConfig cfg = solver_for(s, o);
  const Seeded seed = pick_seed(o.seed, &s);
  cfg.seed = seed.seed;
  put_seed(report, seed);
  const CeriSolution sol = solve_ceri(s.economy, budgets, cfg);
  report["solution"] = solution_to_json(s.economy, sol);
  const CeriReport check = verify_ceri(s.economy, budgets, sol.prices.values, sol.allocation, cfg.tol_clearing);
  report["verification"] = Json{{"is_ceri", check.is_ceri}, {"violations", violations_to_json(check.violations)}};
  if (!sol.converged()) return kExitNotConverged;
  return check.is_ceri ? kExitOk : kExitVerification;
}

int cmd_implement(const Options& o, const CommandContext& ctx, Json& report) {
  const Scenario s = parse_scenario(resolve(ctx, o.scenario));
  const Economy& e = s.economy;
  const auto budgets = require_budgets(s);
  const Seeded seed = pick_seed(o.seed, &s);
  put_seed(report, seed);
  const int kappa = o.kappa.value_or(std::max(0, e.delta() - 1));
  Eigen::VectorXd prices;
  LotteryAllocation allocation;
  if (s.prices) {
    prices = *s.prices;
    for (int i = 0; i < e.num_agents(); ++i) allocation.push_back(bundle_probabilities(e.agents[i], prices, budgets[i]));
    report["prices_source"] = "scenario";
  } else {
    SolverConfig cfg = solver_for(s, o);
    cfg.seed = derive_seed(seed.seed, 0);
    const CeriSolution sol = solve_ceri(e, budgets, cfg);
    report["solution"] = solution_to_json(e, sol);
    if (!sol.converged()) return kExitNotConverged;
    prices = sol.prices.values;
    allocation = sol.allocation;
    report["prices_source"] = "solver";
  }
  if (s.allocation) allocation = *s.allocation;
  report["prices"] = prices_to_json(e, prices);
  report["lotteries"] = lotteries_to_json(e, allocation);
  ExPostImplementation impl;
  if (s.atoms) {
    impl = implementation_of(s);
    report["atoms_source"] = "scenario";
  } else {
    impl = build_implementation(e, budgets, prices, allocation, derive_seed(seed.seed, 1), parse_method(o.method));
    report["atoms_source"] = "decomposition";
  }
  const auto violations = check_implementation(e, budgets, allocation, impl, kappa);
  report["slack_bound"] = kappa;
  report["atoms"] = atoms_to_json(e, impl);
  report["atom_count"] = impl.atoms.size();
  report["violations"] = violations_to_json(violations);
  return violations.empty() ? kExitOk : kExitVerification;
}

Scenario load_with_allocation(const Options& o, const CommandContext& ctx) {
  const std::string path = resolve(ctx, o.scenario);
  if (o.allocation.empty()) return parse_scenario(path);
  Json root = Json::parse(read_file(path));
  const Json extra = Json::parse(read_file(resolve(ctx, o.allocation)));
  root["allocation"] = extra.is_object() && extra.contains("allocation") ? extra["allocation"] : extra;
  if (extra.is_object() && extra.contains("prices")) root["prices"] = extra["prices"];
  if (extra.is_object() && extra.contains("implementation")) root["implementation"] = extra["implementation"];
  return parse_scenario_text(root.dump(2), path);
}

int cmd_verify(const Options& o, const CommandContext& ctx, Json& report) {
  const Scenario s = load_with_allocation(o, ctx);
  const Economy& e = s.economy;
  if (!s.allocation) throw UsageError("verify needs an allocation");
  const LotteryAllocation& allocation = *s.allocation;
  report["lotteries"] = lotteries_to_json(e, allocation);
  std::vector<std::string> checks;
  std::stringstream list(o.checks);
  for (std::string item; std::getline(list, item, ',');) {
    if (!item.empty()) checks.push_back(item);
  }
  bool failed = false;
  Json results = Json::object();
  for (const auto& check : checks) {
    if (check == "efficiency") {
      const EfficiencyCertificate cert = is_ordinally_efficient(e, allocation);
      results["efficiency"] = certificate_to_json(e, cert);
      failed = failed || !cert.efficient;
    } else if (check == "envy") {
      const auto pairs = envy_pairs(e, allocation);
      Json list = Json::array();
      for (const auto& [i, j] : pairs) list.push_back(Json{e.agents[i].name, e.agents[j].name});
      results["envy"] = Json{{"envy_free", pairs.empty()}, {"pairs", list}};
      failed = failed || !pairs.empty();
    } else if (check == "ef1") {
      ExPostImplementation impl;
      if (s.atoms && s.prices) {
        impl = implementation_of(s);
      } else {
        Atom atom{1.0, {}, {}};
        for (int i = 0; i < e.num_agents(); ++i) {
          int k = 0;
          while (k < allocation[i].size() && std::abs(allocation[i][k] - 1.0) > kProbTol) ++k;
          if (k == allocation[i].size()) throw UsageError("ef1 needs atoms or a deterministic allocation");
          atom.allocation.push_back(k);
          atom.budgets.push_back(0.0);
        }
        impl.atoms.push_back(atom);
      }
      Json list = Json::array();
      const auto failures = ef1_failures(e, impl);
      for (const auto& f : failures) {
        list.push_back(Json{{"atom", f.atom}, {"envious", e.agents[f.envious].name}, {"envied", e.agents[f.envied].name}});
      }
      results["ef1"] = Json{{"ef1", failures.empty()}, {"failures", list}};
      failed = failed || !failures.empty();
    } else if (check == "ceri") {
      if (!s.prices || s.budgets.empty()) throw UsageError("the ceri check needs prices and budgets");
      const CeriReport r = verify_ceri(e, s.budgets, *s.prices, allocation);
      results["ceri"] = Json{{"is_ceri", r.is_ceri}, {"violations", violations_to_json(r.violations)}};
      failed = failed || !r.is_ceri;
    } else if (check == "implementation") {
      if (!s.atoms || s.budgets.empty()) throw UsageError("the implementation check needs atoms and budgets");
      const auto violations =
          check_implementation(e, s.budgets, allocation, implementation_of(s), std::max(0, e.delta() - 1));
      results["implementation"] = Json{{"valid", violations.empty()}, {"violations", violations_to_json(violations)}};
      failed = failed || !violations.empty();
    } else {
      throw UsageError("unknown check " + check);
    }
  }
  report["checks"] = results;
  return failed ? kExitVerification : kExitOk;
}

int cmd_run(const Options& o, const CommandContext& ctx, Json& report) {
  const Scenario s = parse_scenario(resolve(ctx, o.scenario));
  const Economy& e = s.economy;
  const Seeded seed = pick_seed(o.seed, &s);
  put_seed(report, seed);
  const SolverConfig cfg = solver_for(s, o);
  bool failed = false;
  const std::string& m = o.mechanism;
  if (m == "ceri-s" || m == "ceri-l") {
    MechanismOutcome out;
    if (m == "ceri-s") {
      const double epsilon = o.epsilon.value_or(0.5 / e.num_goods());
      report["epsilon"] = epsilon;
      out = ceri_s(e, epsilon, seed.seed, cfg);
    } else {
      CeriLOptions options;
      options.lambda = o.lambda;
      options.solver = cfg;
      out = ceri_l(e, seed.seed, options);
    }
    report["outcome"] = outcome_to_json(e, out);
    if (m == "ceri-s") {
      const CeriReport check = verify_ceri(e, out.budgets, out.prices, out.allocation, cfg.tol_clearing);
      report["ceri"] = Json{{"is_ceri", check.is_ceri}, {"violations", violations_to_json(check.violations)}};
      failed = !check.is_ceri;
    }
    const auto violations =
        check_implementation(e, out.budgets, out.allocation, *out.implementation, std::max(0, e.delta() - 1));
    report["implementation_violations"] = violations_to_json(violations);
    failed = failed || !violations.empty();
  } else if (m == "sd") {
    const std::vector<int> order = o.order.empty() ? random_order(e.num_agents(), seed.seed) : o.order;
    const Allocation alloc = serial_dictatorship(e, order);
    const LotteryAllocation lotteries = degenerate_allocation(e, alloc);
    Json names = Json::array();
    for (int i : order) names.push_back(e.agents.at(i).name);
    report["order"] = names;
    report["lotteries"] = lotteries_to_json(e, lotteries);
    report["ceri_form"] = ceri_form_json(e, sd_to_ceri(e, order, alloc), lotteries, failed);
  } else if (m == "rsd") {
    const LotteryAllocation lotteries = rsd(e, seed.seed);
    report["exact"] = e.num_agents() <= 9;
    report["lotteries"] = lotteries_to_json(e, lotteries);
    if (e.num_agents() <= 9) {
      const auto exact = rsd_exact(e);
      Json fractions = Json::array();
      for (int i = 0; i < e.num_agents(); ++i) {
        Json agent = Json::object();
        for (int k = 0; k < exact[i].size(); ++k) {
          if (exact[i][k] != 0) agent[format_bundle(e, e.bundle_of(i, k))] = exact[i][k].str();
        }
        fractions.push_back(agent);
      }
      report["fractions"] = fractions;
    }
  } else if (m == "ps" || m == "bps") {
    const EatingTrace trace = m == "ps" ? ps(e) : bps(e);
    report["lotteries"] = lotteries_to_json(e, trace.allocation);
    Json exhausted = Json::object();
    for (int j = 0; j < e.num_goods(); ++j) {
      exhausted[e.good_name(j)] = std::isfinite(trace.exhausted_at[j]) ? Json(trace.exhausted_at[j]) : Json(nullptr);
    }
    report["exhausted_at"] = exhausted;
    const CeriForm form = m == "ps" ? ps_to_ceri(e, trace) : bps_to_ceri(e, trace);
    report["ceri_form"] = ceri_form_json(e, form, trace.allocation, failed);
  } else {
    throw UsageError("unknown mechanism " + m);
  }
  return failed ? kExitVerification : kExitOk;
}

int cmd_probe(const Options& o, const CommandContext& ctx, Json& report) {
  const Scenario s = parse_scenario(resolve(ctx, o.scenario));
  const Economy& e = s.economy;
  const auto misreports = read_misreports(resolve(ctx, o.misreports), e);
  const Seeded seed = pick_seed(o.seed, &s);
  put_seed(report, seed);
  const SolverConfig cfg = solver_for(s, o);
  LotteryMechanism mech;
  const std::string& m = o.mechanism;
  if (m == "ceri-l") {
    CeriLOptions options;
    options.implement = false;
    options.solver = cfg;
    options.lambda = o.lambda;
    for (const auto& agent : e.agents) {
      if (std::find(options.universe.begin(), options.universe.end(), agent) == options.universe.end()) {
        options.universe.push_back(agent);
      }
    }
    for (const auto& list : misreports) {
      for (const auto& p : list) {
        if (std::find(options.universe.begin(), options.universe.end(), p) == options.universe.end()) {
          options.universe.push_back(p);
        }
      }
    }
    // Names are not part of a type.
    for (auto& t : options.universe) t.name.clear();
    mech = [options](const Economy& x, std::uint64_t omega) {
      Economy anonymous = x;
      for (auto& a : anonymous.agents) a.name.clear();
      return ceri_l(anonymous, omega, options).allocation;
    };
  } else if (m == "ceri-s") {
    const double epsilon = o.epsilon.value_or(0.5 / e.num_goods());
    mech = [epsilon, cfg](const Economy& x, std::uint64_t omega) { return ceri_s(x, epsilon, omega, cfg).allocation; };
  } else if (m == "rsd") {
    mech = [](const Economy& x, std::uint64_t omega) { return rsd(x, omega); };
  } else if (m == "sd") {
    mech = [](const Economy& x, std::uint64_t omega) {
      return degenerate_allocation(x, serial_dictatorship(x, random_order(x.num_agents(), omega)));
    };
  } else if (m == "ps") {
    mech = [](const Economy& x, std::uint64_t) { return ps(x).allocation; };
  } else if (m == "bps") {
    mech = [](const Economy& x, std::uint64_t) { return bps(x).allocation; };
  } else {
    throw UsageError("unknown mechanism " + m);
  }
  const SpProbeReport r = sp_probe(e, mech, misreports, o.samples, seed.seed);
  const long truthful = std::count(r.truthful.begin(), r.truthful.end(), true);
  report["probe"] = Json{{"mechanism", m},
                         {"samples", r.samples},
                         {"solver_failures", r.solver_failures},
                         {"truthful_samples", truthful},
                         {"probability", r.probability},
                         {"std_error", r.std_error}};
  return kExitOk;
}

int cmd_grid(const Options& o, Json& report) {
  if (o.lambda < 1 || o.tau < 1 || o.trials < 1) throw UsageError("lambda, tau and trials must be positive");
  const Seeded seed = pick_seed(o.seed, nullptr);
  put_seed(report, seed);
  const GridStats g = grid_stats(o.lambda, o.tau, o.trials, seed.seed);
  report["near_hit"] = Json{{"lambda", g.near_hit.lambda},
                            {"count", g.near_hit.count},
                            {"trials", g.near_hit.trials},
                            {"frequency", g.near_hit.frequency},
                            {"theory", g.near_hit.theory}};
  report["rounding"] = Json{{"tau", g.rounding.tau},
                            {"epsilon", g.rounding.epsilon},
                            {"n", g.rounding.n},
                            {"lambda", g.rounding.lambda},
                            {"trials", g.rounding.trials},
                            {"bound", g.rounding.bound},
                            {"event_frequency", g.rounding.event_frequency},
                            {"min_ratio", g.rounding.min_ratio},
                            {"mean_ratio", g.rounding.mean_ratio}};
  return kExitOk;
}

std::string first_difference(const std::string& want, const std::string& got) {
  std::istringstream a(want);
  std::istringstream b(got);
  std::string la;
  std::string lb;
  for (int line = 1;; ++line) {
    const bool ha = static_cast<bool>(std::getline(a, la));
    const bool hb = static_cast<bool>(std::getline(b, lb));
    if (!ha && !hb) return "";
    if (!ha || !hb || la != lb) {
      return "line " + std::to_string(line) + ": expected '" + (ha ? la : "<eof>") + "', got '" +
             (hb ? lb : "<eof>") + "'";
    }
  }
}

int cmd_corpus(const Options& o, const CommandContext& ctx, Json& report) {
  const std::filesystem::path dir = resolve(ctx, o.dir);
  const Json index = Json::parse(read_file((dir / "corpus.json").string()));
  Json results = Json::array();
  bool failed = false;
  for (const auto& entry : index.at("entries")) {
    const auto args = entry.at("args").get<std::vector<std::string>>();
    const int want_exit = entry.at("exit").get<int>();
    const std::filesystem::path expected = dir / entry.at("expected").get<std::string>();
    std::ostringstream out;
    std::ostringstream err;
    const int got_exit = run_command(args, out, err, CommandContext{dir});
    Json r = Json{{"name", entry.at("name")}, {"exit", got_exit}};
    if (o.update) {
      std::ofstream(expected) << out.str();
      r["status"] = "updated";
    } else {
      std::string diff;
      if (got_exit != want_exit) {
        diff = "exit " + std::to_string(got_exit) + ", expected " + std::to_string(want_exit);
      } else {
        std::ifstream in(expected);
        if (!in) {
          diff = "missing expectation " + expected.string();
        } else {
          std::stringstream buffer;
          buffer << in.rdbuf();
          diff = first_difference(buffer.str(), out.str());
        }
      }
      r["status"] = diff.empty() ? "pass" : "fail";
      if (!diff.empty()) r["diff"] = diff;
      failed = failed || !diff.empty();
    }
    results.push_back(r);
  }
  report["results"] = results;
  return failed ? kExitVerification : kExitOk;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
                const CommandContext& context) {
  CLI::App app{"Competitive equilibrium from random incomes: solve, implement, verify and run mechanisms."};
  app.name("ceri");
  app.require_subcommand(1);
  app.set_version_flag("--version", CERI_VERSION);
  Options o;
  app.add_flag("--timings", o.timings, "Add wall-clock timings to the report");

  auto* solve = app.add_subcommand("solve-ceri", "Solve for an equilibrium at the scenario's budgets");
  solve->add_option("--scenario", o.scenario, "Scenario file")->required();
  solve->add_option("--tol", o.tol, "Clearing and slackness tolerance");
  solve->add_option("--seed", o.seed, "Seed for solver restarts");
  solve->add_option("--max-iters", o.max_iters, "Iteration budget per restart");

  auto* implement = app.add_subcommand("implement", "Build or check an ex-post implementation");
  implement->add_option("--scenario", o.scenario, "Scenario file")->required();
  implement->add_option("--seed", o.seed, "Seed for atom budgets");
  implement->add_option("--method", o.method, "Decomposition: auto, rounding or enumeration");
  implement->add_option("--kappa", o.kappa, "Allowed overflow per good (default: largest bundle size - 1)");

  auto* verify = app.add_subcommand("verify", "Check an allocation");
  auto* positional = verify->add_option("file", o.scenario, "Scenario file carrying the allocation");
  verify->add_option("--scenario", o.scenario, "Scenario file")->excludes(positional);
  verify->add_option("--allocation", o.allocation, "File with the allocation (and optionally prices)");
  verify->add_option("--checks", o.checks, "Comma list of efficiency, envy, ef1, ceri, implementation");

  auto* run = app.add_subcommand("run", "Run an allocation mechanism");
  run->add_option("--mechanism", o.mechanism, "ceri-s, ceri-l, sd, rsd, ps or bps")->required();
  run->add_option("--scenario", o.scenario, "Scenario file")->required();
  run->add_option("--seed", o.seed, "Mechanism seed");
  run->add_option("--epsilon", o.epsilon, "Budget spread for ceri-s, below 1/m");
  run->add_option("--order", o.order, "Serial dictatorship order (agent indices)");
  run->add_option("--lambda", o.lambda, "Grid step for ceri-l (0 picks the default)");

  auto* probe = app.add_subcommand("probe-sp", "Monte-Carlo strategyproofness probe");
  probe->add_option("--mechanism", o.mechanism, "Mechanism to probe")->required();
  probe->add_option("--scenario", o.scenario, "Scenario file")->required();
  probe->add_option("--misreports", o.misreports, "Misreports file")->required();
  probe->add_option("--samples", o.samples, "Number of random seeds");
  probe->add_option("--seed", o.seed, "Base seed");
  probe->add_option("--epsilon", o.epsilon, "Budget spread for ceri-s");
  probe->add_option("--lambda", o.lambda, "Grid step for ceri-l (0 picks the default)");

  auto* grid = app.add_subcommand("grid-stats", "Random grid statistics");
  grid->add_option("--lambda", o.lambda, "Grid step")->required();
  grid->add_option("--tau", o.tau, "Number of types");
  grid->add_option("--trials", o.trials, "Monte-Carlo trials");
  grid->add_option("--seed", o.seed, "Seed");

  auto* corpus = app.add_subcommand("corpus", "Replay the scenario corpus against stored reports");
  corpus->add_option("--dir", o.dir, "Corpus directory");
  corpus->add_flag("--update", o.update, "Rewrite the stored reports");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const auto start = std::chrono::steady_clock::now();
  SolverConfig defaults;
  if (!o.scenario.empty()) {
    try {
      defaults = parse_scenario(resolve(context, o.scenario)).solver.apply({});
    } catch (const Error&) {
      // Reported by the command itself.
    }
  }
  if (o.tol) defaults.tol_clearing = defaults.tol_slackness = *o.tol;
  Json report = report_header(args, defaults);
  int code = kExitOk;
  try {
    if (solve->parsed()) {
      code = cmd_solve(o, context, report);
    } else if (implement->parsed()) {
      code = cmd_implement(o, context, report);
    } else if (verify->parsed()) {
      if (o.scenario.empty()) throw UsageError("verify needs a scenario file");
      code = cmd_verify(o, context, report);
    } else if (run->parsed()) {
      code = cmd_run(o, context, report);
    } else if (probe->parsed()) {
      code = cmd_probe(o, context, report);
    } else if (grid->parsed()) {
      code = cmd_grid(o, report);
    } else if (corpus->parsed()) {
      code = cmd_corpus(o, context, report);
    }
  } catch (const NotConverged& e) {
    report["error"] = error_json(e);
    const Eigen::VectorXd& p = e.best().prices.values;
    const Eigen::VectorXd& z = e.best().residual;
    report["best_iterate"] = Json{{"prices", std::vector<double>(p.begin(), p.end())},
                                  {"residual", std::vector<double>(z.begin(), z.end())}};
    code = kExitNotConverged;
  } catch (const Error& e) {
    report["error"] = error_json(e);
    err << e.what() << "\n";
    code = kExitUsage;
  } catch (const UsageError& e) {
    report["error"] = Json{{"code", "USAGE"}, {"message", e.what()}};
    err << e.what() << "\n";
    code = kExitUsage;
  } catch (const Json::exception& e) {
    report["error"] = Json{{"code", "PARSE_ERROR"}, {"message", e.what()}};
    err << e.what() << "\n";
    code = kExitUsage;
  }
  report["exit_code"] = code;
  if (o.timings) {
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    report["timings"] = Json{{"total_seconds", elapsed.count()}};
  }
  out << render(report);
  return code;
}

}  // namespace ceri
