#include "qhrl/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <iomanip>
#include <set>

#include "qhrl/convergence_log.hpp"
#include "qhrl/policy_eval.hpp"
#include "qhrl/qlearning.hpp"

namespace qhrl {

using nlohmann::json;
namespace fs = std::filesystem;

const char* category_name(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::config: return "config";
    case ErrorCategory::io: return "io";
    case ErrorCategory::solver: return "solver";
    case ErrorCategory::coverage: return "coverage";
    case ErrorCategory::internal: break;
  }
  return "internal";
}

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

namespace {

void expect_object(const json& doc, const std::string& where) {
  if (!doc.is_object()) throw SchemaError(where.empty() ? "/" : where, "expected an object");
}

void check_keys(const json& doc, const std::string& where, std::initializer_list<const char*> allowed) {
  expect_object(doc, where);
  for (const auto& [key, value] : doc.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw SchemaError(where + "/" + key, "unknown field");
    }
  }
}

const json* optional_member(const json& doc, const char* key) {
  auto it = doc.find(key);
  return it == doc.end() ? nullptr : &*it;
}

const json& required_member(const json& doc, const std::string& where, const char* key) {
  const json* v = optional_member(doc, key);
  if (!v) throw SchemaError(where + "/" + key, "missing field");
  return *v;
}

double as_number(const json& v, const std::string& field) {
  if (!v.is_number()) throw SchemaError(field, "expected a number");
  return v.get<double>();
}

std::uint64_t as_unsigned(const json& v, const std::string& field) {
  if (!v.is_number_unsigned()) throw SchemaError(field, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

std::string as_string(const json& v, const std::string& field) {
  if (!v.is_string()) throw SchemaError(field, "expected a string");
  return v.get<std::string>();
}

// Runs a constructor or validator and pins any std::invalid_argument to a field.
template <class F>
auto at_field(const std::string& field, F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw SchemaError(field, e.what());
  }
}

InventoryParams parse_inventory(const json& doc, const std::string& where) {
  check_keys(doc, where, {"capacity", "unit_cost", "holding_cost", "price", "demand_pmf"});
  InventoryParams p;
  if (auto* v = optional_member(doc, "capacity")) p.capacity = as_unsigned(*v, where + "/capacity");
  if (auto* v = optional_member(doc, "unit_cost")) p.unit_cost = as_number(*v, where + "/unit_cost");
  if (auto* v = optional_member(doc, "holding_cost")) p.holding_cost = as_number(*v, where + "/holding_cost");
  if (auto* v = optional_member(doc, "price")) p.price = as_number(*v, where + "/price");
  if (auto* v = optional_member(doc, "demand_pmf")) {
    if (!v->is_array()) throw SchemaError(where + "/demand_pmf", "expected an array of probabilities");
    p.demand_pmf.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      p.demand_pmf.push_back(as_number((*v)[i], where + "/demand_pmf/" + std::to_string(i)));
    }
  }
  at_field(where, [&] {
    p.validate();
    return 0;
  });
  return p;
}

RandomMdpSpec parse_random_mdp(const json& doc, const std::string& where) {
  check_keys(doc, where, {"num_states", "num_actions", "reward_low", "reward_high", "sparsity", "seed"});
  RandomMdpSpec spec;
  if (auto* v = optional_member(doc, "num_states")) spec.num_states = as_unsigned(*v, where + "/num_states");
  if (auto* v = optional_member(doc, "num_actions")) spec.num_actions = as_unsigned(*v, where + "/num_actions");
  if (auto* v = optional_member(doc, "reward_low")) spec.reward_low = as_number(*v, where + "/reward_low");
  if (auto* v = optional_member(doc, "reward_high")) spec.reward_high = as_number(*v, where + "/reward_high");
  if (auto* v = optional_member(doc, "sparsity")) spec.sparsity = as_number(*v, where + "/sparsity");
  if (auto* v = optional_member(doc, "seed")) spec.seed = as_unsigned(*v, where + "/seed");
  at_field(where, [&] {
    spec.validate();
    return 0;
  });
  return spec;
}

EnvironmentSource parse_environment(const json& doc, const fs::path& base_dir) {
  const std::string where = "/environment";
  check_keys(doc, where, {"inventory", "random_mdp", "mdp_file"});
  if (doc.size() != 1) throw SchemaError(where, "exactly one of inventory, random_mdp, mdp_file is required");
  if (auto* v = optional_member(doc, "inventory")) return parse_inventory(*v, where + "/inventory");
  if (auto* v = optional_member(doc, "random_mdp")) return parse_random_mdp(*v, where + "/random_mdp");
  fs::path file = as_string(doc["mdp_file"], where + "/mdp_file");
  if (file.is_relative()) file = base_dir / file;
  return file;
}

void parse_algorithm(const json& doc, ExperimentConfig& cfg) {
  const std::string where = "/algorithm";
  check_keys(doc, where, {"num_sweeps", "seeds", "step_size", "scenario", "policies"});
  if (auto* v = optional_member(doc, "num_sweeps")) cfg.num_sweeps = as_unsigned(*v, where + "/num_sweeps");
  if (auto* v = optional_member(doc, "seeds")) {
    if (!v->is_array()) throw SchemaError(where + "/seeds", "expected an array of seeds");
    cfg.seeds.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      cfg.seeds.push_back(as_unsigned((*v)[i], where + "/seeds/" + std::to_string(i)));
    }
    if (cfg.seeds.empty()) throw SchemaError(where + "/seeds", "seed list must not be empty");
  }
  if (auto* v = optional_member(doc, "step_size")) {
    const std::string ss = where + "/step_size";
    check_keys(*v, ss, {"scale", "offset", "exponent"});
    double scale = 1.0, offset = 1.0, exponent = 0.7;
    if (auto* x = optional_member(*v, "scale")) scale = as_number(*x, ss + "/scale");
    if (auto* x = optional_member(*v, "offset")) offset = as_number(*x, ss + "/offset");
    if (auto* x = optional_member(*v, "exponent")) exponent = as_number(*x, ss + "/exponent");
    cfg.schedule = at_field(ss, [&] { return StepSizeSchedule(scale, offset, exponent); });
  }
  if (auto* v = optional_member(doc, "scenario")) {
    cfg.scenario = as_string(*v, where + "/scenario");
    if (std::find(kScenarioNames.begin(), kScenarioNames.end(), cfg.scenario) == kScenarioNames.end()) {
      throw SchemaError(where + "/scenario", "unknown scenario '" + cfg.scenario + "'");
    }
  }
  if (auto* v = optional_member(doc, "policies")) {
    check_keys(*v, where + "/policies", {"behavior", "initial", "tail"});
    for (const char* key : {"behavior", "initial", "tail"}) required_member(*v, where + "/policies", key);
    if (!cfg.scenario.empty()) throw SchemaError(where, "give either a scenario or explicit policies, not both");
    cfg.explicit_policies = *v;
  }
}

}  // namespace

ExperimentConfig parse_config(const json& doc, const fs::path& base_dir) {
  check_keys(doc, "", {"environment", "discount", "solver", "algorithm", "output"});
  ExperimentConfig cfg;
  cfg.environment = parse_environment(required_member(doc, "", "environment"), base_dir);

  const json& discount = required_member(doc, "", "discount");
  check_keys(discount, "/discount", {"sigma", "gamma"});
  const double sigma = as_number(required_member(discount, "/discount", "sigma"), "/discount/sigma");
  const double gamma = as_number(required_member(discount, "/discount", "gamma"), "/discount/gamma");
  cfg.discount = at_field("/discount", [&] { return DiscountParams(sigma, gamma); });

  if (auto* v = optional_member(doc, "solver")) {
    check_keys(*v, "/solver", {"tolerance", "max_iterations"});
    if (auto* x = optional_member(*v, "tolerance")) cfg.solver.tolerance = as_number(*x, "/solver/tolerance");
    if (auto* x = optional_member(*v, "max_iterations")) {
      cfg.solver.max_iterations = as_unsigned(*x, "/solver/max_iterations");
    }
    at_field("/solver", [&] {
      cfg.solver.validate();
      return 0;
    });
  }
  if (auto* v = optional_member(doc, "algorithm")) parse_algorithm(*v, cfg);
  if (auto* v = optional_member(doc, "output")) {
    check_keys(*v, "/output", {"directory", "prefix"});
    if (auto* x = optional_member(*v, "directory")) cfg.output_dir = as_string(*x, "/output/directory");
    if (auto* x = optional_member(*v, "prefix")) cfg.output_prefix = as_string(*x, "/output/prefix");
  }
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  return parse_config(read_json_file(path), path.parent_path());
}

// ---------------------------------------------------------------------------
// Environments and reference values
// ---------------------------------------------------------------------------

Environment build_environment(const ExperimentConfig& config) {
  return std::visit(
      [&](const auto& source) -> Environment {
        using T = std::decay_t<decltype(source)>;
        if constexpr (std::is_same_v<T, InventoryParams>) {
          const bool reference = source == InventoryParams{} && config.discount == DiscountParams(0.3, 0.9);
          return {inventory_mdp(source), std::make_shared<InventoryModel>(source), reference};
        } else if constexpr (std::is_same_v<T, RandomMdpSpec>) {
          TabularMdp mdp = random_mdp(source);
          return {mdp, std::make_shared<TabularModel>(mdp), false};
        } else {
          TabularMdp mdp = mdp_from_json(read_json_file(source));
          return {mdp, std::make_shared<TabularModel>(mdp), false};
        }
      },
      config.environment);
}

ReferenceComparison compare_with_reference(const QTable& q_sigma_gamma, const QTable& q_gamma) {
  if (q_sigma_gamma.rows() != 3 || q_sigma_gamma.cols() != 3 || q_gamma.rows() != 3 || q_gamma.cols() != 3) {
    throw std::invalid_argument("reference comparison needs 3x3 tables");
  }
  constexpr double kSlack = 1e-9;
  ReferenceComparison out;
  for (int s = 0; s < 3; ++s) {
    for (int a = 0; a < 3; ++a) {
      for (double dev : {std::abs(q_sigma_gamma(s, a) - kReferenceQSigmaGamma[s][a]),
                         std::abs(q_gamma(s, a) - kReferenceQGamma[s][a])}) {
        out.max_deviation = std::max(out.max_deviation, dev);
        if (dev > kReferenceTolerance + kSlack) ++out.flagged_cells;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

namespace {

fs::path prepare_output(const ExperimentConfig& config) {
  fs::create_directories(config.output_dir);
  return config.output_dir;
}

void write_csv(const fs::path& path, const ConvergenceLog& log) {
  std::ofstream out(path);
  if (!out) throw std::ios_base::failure("cannot write " + path.string());
  log.write_csv(out);
}

std::string join(const std::vector<std::size_t>& xs) {
  std::string s = "(";
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + std::to_string(xs[i]);
  return s + ")";
}

void print_reference_table(std::ostream& out, const QhOptimalSolution& sol) {
  out << "Action values vs. published reference (computed [reference], '*' = off by > "
      << kReferenceTolerance << ")\n";
  out << std::fixed << std::setprecision(3);
  out << "s | Q_sigma_gamma a=0..2                          | Q_gamma a=0..2\n";
  for (int s = 0; s < 3; ++s) {
    out << s << " |";
    auto cell = [&](double v, double ref) {
      const bool flag = std::abs(v - ref) > kReferenceTolerance + 1e-9;
      out << ' ' << std::setw(7) << v << " [" << std::setprecision(2) << std::setw(5) << ref << "]"
          << (flag ? '*' : ' ') << std::setprecision(3);
    };
    for (int a = 0; a < 3; ++a) cell(sol.q_sigma_gamma(s, a), kReferenceQSigmaGamma[s][a]);
    out << " |";
    for (int a = 0; a < 3; ++a) cell(sol.q_gamma(s, a), kReferenceQGamma[s][a]);
    out << '\n';
  }
  out.unsetf(std::ios::floatfield);
  out << std::setprecision(6);
}

template <class Result, class Work>
std::vector<Result> run_seeds(const std::vector<std::uint64_t>& seeds, Work work) {
  std::vector<std::future<Result>> jobs;
  jobs.reserve(seeds.size());
  for (std::uint64_t seed : seeds) jobs.push_back(std::async(std::launch::async, work, seed));
  std::vector<Result> out;
  out.reserve(seeds.size());
  for (auto& job : jobs) out.push_back(job.get());
  return out;
}

void require_seeds(const ExperimentConfig& config) {
  if (config.seeds.empty()) throw SchemaError("/algorithm/seeds", "stochastic algorithms need at least one seed");
}

}  // namespace

SolveReport cmd_solve_exact(const ExperimentConfig& config, std::ostream& out) {
  const Environment env = build_environment(config);
  SolveReport report{optimal_qh_solution(env.mdp, config.discount, config.solver), std::nullopt};
  const QhOptimalSolution& sol = report.solution;

  const fs::path dir = prepare_output(config);
  write_json_file(dir / "q_gamma.json", qtable_to_json(sol.q_gamma));
  write_json_file(dir / "q_sigma_gamma.json", qtable_to_json(sol.q_sigma_gamma));
  write_json_file(dir / "policy.json", json{{"mu_star", sol.mu_star}, {"pi_star", sol.pi_star}});
  write_json_file(dir / "values.json", json{{"v_star", values_to_json(sol.v_star)},
                                            {"v_gamma", values_to_json(sol.v_gamma)}});
  write_json_file(dir / "mdp.json", mdp_to_json(env.mdp));

  out << "value iteration converged in " << sol.iterations << " iterations\n";
  out << "mu* = " << join(sol.mu_star) << "  pi* = " << join(sol.pi_star) << '\n';
  if (env.is_reference_instance) {
    report.reference = compare_with_reference(sol.q_sigma_gamma, sol.q_gamma);
    print_reference_table(out, sol);
    out << "reference check: " << (report.reference->flagged_cells == 0 ? "all 18 cells match" : "MISMATCH")
        << " (max deviation " << report.reference->max_deviation << ")\n";
  }
  return report;
}

QLearnReport cmd_qlearn(const ExperimentConfig& config, std::ostream& out) {
  require_seeds(config);
  const Environment env = build_environment(config);
  QLearnReport report{optimal_qh_solution(env.mdp, config.discount, config.solver), {}};
  const QReference reference{report.exact.q_gamma, report.exact.q_sigma_gamma};

  auto runs = run_seeds<QLearnRun>(config.seeds, [&](std::uint64_t seed) {
    return run_qlearning(*env.model, config.discount, config.schedule, config.num_sweeps, seed, reference);
  });

  const fs::path dir = prepare_output(config);
  json summary = json::array();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::uint64_t seed = config.seeds[i];
    const QLearnRun& run = runs[i];
    const std::string stem = config.output_prefix + "qlearn_seed" + std::to_string(seed);
    write_csv(dir / (stem + ".csv"), run.log);
    write_json_file(dir / (stem + "_z.json"), qtable_to_json(run.state.z));
    write_json_file(dir / (stem + "_q.json"), qtable_to_json(run.state.q));

    QLearnSeedResult r;
    r.seed = seed;
    r.mu_hat = run.mu_hat;
    r.pi_hat = run.pi_hat;
    r.policies_match = config.num_sweeps > 0 && run.mu_hat == report.exact.mu_star &&
                       run.pi_hat == report.exact.pi_star;
    r.final_err_z_sup = (run.state.z - reference.q_gamma).cwiseAbs().maxCoeff();
    r.final_err_q_sup = (run.state.q - reference.q_sigma_gamma).cwiseAbs().maxCoeff();
    summary.push_back({{"seed", seed},
                       {"sweeps", config.num_sweeps},
                       {"mu_hat", r.mu_hat},
                       {"pi_hat", r.pi_hat},
                       {"policies_match", r.policies_match},
                       {"final_err_Z_sup", r.final_err_z_sup},
                       {"final_err_Q_sup", r.final_err_q_sup}});
    out << "seed " << seed << ": mu_hat=" << join(r.mu_hat) << " pi_hat=" << join(r.pi_hat)
        << (r.policies_match ? " match" : " NO MATCH") << "  |Z-Q_gamma|_inf=" << r.final_err_z_sup
        << "  |Q-Q_sigma_gamma|_inf=" << r.final_err_q_sup << '\n';
    report.seeds.push_back(std::move(r));
  }
  const auto matches = std::count_if(report.seeds.begin(), report.seeds.end(),
                                     [](const QLearnSeedResult& r) { return r.policies_match; });
  write_json_file(dir / (config.output_prefix + "qlearn_summary.json"),
                  json{{"mu_star", report.exact.mu_star},
                       {"pi_star", report.exact.pi_star},
                       {"matches", matches},
                       {"seeds", std::move(summary)}});
  out << matches << "/" << report.seeds.size() << " seeds recovered (mu*, pi*) = " << join(report.exact.mu_star)
      << ", " << join(report.exact.pi_star) << '\n';
  return report;
}

EvalReport cmd_eval_policy(const ExperimentConfig& config, std::ostream& out) {
  require_seeds(config);
  const Environment env = build_environment(config);
  const std::size_t S = env.mdp.num_states();
  const std::size_t A = env.mdp.num_actions();

  EvalReport report;
  std::optional<StationaryPolicy> behavior;
  std::optional<OneStepPolicy> target;
  if (config.explicit_policies) {
    const json& p = *config.explicit_policies;
    const std::string where = "/algorithm/policies";
    behavior = policy_from_json(p["behavior"], A, where + "/behavior");
    target.emplace(policy_from_json(p["initial"], A, where + "/initial"),
                   policy_from_json(p["tail"], A, where + "/tail"));
    for (const auto* pol : {&*behavior, &target->initial, &target->tail}) {
      if (pol->num_states() != S) throw SchemaError(where, "policy does not have one row per state");
    }
    report.scenario = "explicit";
  } else {
    if (config.scenario.empty()) throw SchemaError("/algorithm/scenario", "name a scenario or give explicit policies");
    const QhOptimalSolution exact = optimal_qh_solution(env.mdp, config.discount, config.solver);
    const StationaryPolicy uniform = StationaryPolicy::uniform(S, A);
    const OneStepPolicy optimal = exact.policy();
    behavior = uniform;
    if (config.scenario == "fully-off-policy") {
      target = optimal;
    } else if (config.scenario == "off-policy-initial") {
      target.emplace(optimal.initial, uniform);
    } else {
      target.emplace(uniform, optimal.tail);
    }
    report.scenario = config.scenario;
  }

  // Coverage is checked here, before any sampling.
  const EvalProblem base(env.model, *behavior, *target, config.discount, config.schedule, 0);
  const EvalReference reference = exact_eval_reference(env.mdp, config.discount, *target, config.solver);
  report.true_stationary = reference.stationary;
  report.true_one_step = reference.one_step;

  auto runs = run_seeds<EvalRun>(config.seeds, [&](std::uint64_t seed) {
    const EvalProblem problem(env.model, base.behavior(), base.target(), config.discount, config.schedule, seed);
    return run_policy_eval(problem, config.num_sweeps, reference);
  });

  const fs::path dir = prepare_output(config);
  json summary = json::array();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::uint64_t seed = config.seeds[i];
    const EvalRun& run = runs[i];
    write_csv(dir / (config.output_prefix + "eval_" + report.scenario + "_seed" + std::to_string(seed) + ".csv"),
              run.log);
    EvalSeedResult r{seed, (run.state.w - reference.stationary).norm(), (run.state.v - reference.one_step).norm()};
    summary.push_back({{"seed", seed},
                       {"sweeps", config.num_sweeps},
                       {"final_err_W_l2", r.final_err_w_l2},
                       {"final_err_V_l2", r.final_err_v_l2},
                       {"W", values_to_json(run.state.w)},
                       {"V", values_to_json(run.state.v)}});
    out << "seed " << seed << ": |W - V_pi|_2=" << r.final_err_w_l2 << "  |V - V_mu_pi|_2=" << r.final_err_v_l2
        << '\n';
    report.seeds.push_back(r);
  }
  write_json_file(dir / (config.output_prefix + "eval_summary.json"),
                  json{{"scenario", report.scenario},
                       {"true_stationary", values_to_json(report.true_stationary)},
                       {"true_one_step", values_to_json(report.true_one_step)},
                       {"seeds", std::move(summary)}});
  return report;
}

}  // namespace qhrl
