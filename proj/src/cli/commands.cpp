#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "f2f/cli.hpp"

namespace f2f::cli {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitTolerance = 2;

struct Command {
  const char* name;
  const char* help;
  std::vector<std::string> keys;
};

const std::vector<Command>& commands() {
  static const std::vector<Command> list = {
      {"solve", "Steady state and performance metrics at one (loads, coop) point", {"loads", "coop", "format", "out"}},
      {"optimal", "Fair optimal cooperation vector by the fixed-point iteration",
       {"loads", "tol", "max-iters", "format", "out"}},
      {"bisect", "Centralized ratio-driven bisection, one CSV row per round", {"loads", "eps", "steps", "format", "out"}},
      {"pareto", "Two-node blocking/convenience/fairness grid over [0,1]^2", {"loads", "grid", "format", "out"}},
      {"convenience", "Critical load for full-cooperation convenience", {"loads", "grid", "lambda-max", "format", "out"}},
      {"simulate", "Discrete-event simulation at fixed cooperation probabilities",
       {"loads", "coop", "seed", "arrivals", "format", "out"}},
      {"protocol", "Simulated warm-up plus token-ring tuning protocol",
       {"loads", "seed", "arrivals", "k", "eps", "warmup", "rounds", "format", "out", "trace"}},
  };
  return list;
}

class Output {
 public:
  Output(const Scenario& s, std::ostream& fallback) : fallback_(fallback) {
    if (s.out) {
      file_.open(*s.out, std::ios::binary);
      if (!file_) throw InvalidInput("cannot open output file " + *s.out);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : fallback_; }

 private:
  std::ofstream file_;
  std::ostream& fallback_;
};

const LoadVector& need_loads(const Scenario& s) {
  if (!s.loads) throw InvalidInput("--loads is required");
  return *s.loads;
}

const CoopVector& need_coop(const Scenario& s) {
  if (!s.coop) throw InvalidInput("--coop is required");
  return *s.coop;
}

void require_n2(const LoadVector& loads, const char* what) {
  if (loads.size() != 2) throw InvalidInput(std::string(what) + " requires exactly 2 loads");
}

int cmd_solve(const Scenario& s, std::ostream& out) {
  const LoadVector& loads = need_loads(s);
  const CoopVector& coop = need_coop(s);
  require_same_size(loads, coop);
  const SteadyState pi = solve_chain(loads, coop);
  const MetricsReport m = evaluate(pi, loads, coop);
  Output o(s, out);
  if (s.format.value_or(Format::json) == Format::csv) {
    o.stream() << metrics_csv(m, loads, coop);
  } else {
    o.stream() << to_json(m, pi, loads, coop).dump(2) << '\n';
  }
  return kExitOk;
}

int cmd_optimal(const Scenario& s, std::ostream& out, std::ostream& err) {
  const LoadVector& loads = need_loads(s);
  FixedPointOptions options;
  options.tol = s.tol;
  options.max_iters = s.max_iters;
  const SolveReport report = fixed_point(loads, options);
  const double g = g_residual(loads, report.p_star);

  nlohmann::json j = to_json(report);
  j["g"] = std::isfinite(g) ? nlohmann::json(g) : nlohmann::json(nullptr);
  if (loads.size() == 2) {
    const OptimalPair pair = optimal_pair(loads);
    const CoopVector analytic = pair.caller_order();
    j["analytic"] = {{"p", std::vector<double>(analytic.values().begin(), analytic.values().end())},
                     {"swap_applied", pair.swap_applied}};
    if (pair.swap_applied) j["note"] = "loads given lightest-first; probabilities reported in caller order";
  }
  Output o(s, out);
  if (s.format.value_or(Format::json) == Format::csv) {
    o.stream() << "node,lambda,p\n";
    for (std::size_t i = 0; i < loads.size(); ++i) {
      o.stream() << i + 1 << ',' << format_number(loads[i]) << ',' << format_number(report.p_star[i]) << '\n';
    }
  } else {
    o.stream() << j.dump(2) << '\n';
  }
  if (!report.converged || !report.feasible) {
    err << "fixed point did not converge to a feasible vector (residual " << report.residual << ")\n";
    return kExitTolerance;
  }
  return kExitOk;
}

int cmd_bisect(const Scenario& s, std::ostream& out, std::ostream& err) {
  const LoadVector& loads = need_loads(s);
  const auto [report, trace] = centralized_bisect(loads, s.eps.value_or(1e-2), s.steps);
  Output o(s, out);
  if (s.format.value_or(Format::csv) == Format::json) {
    nlohmann::json j = to_json(report);
    j["rounds"] = nlohmann::json::array();
    for (const BisectRound& r : trace.rounds) {
      nlohmann::json jr;
      jr["ratios"] = nlohmann::json::array();
      for (const Ratio& v : r.ratios) jr["ratios"].push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
      jr["selected"] = r.selected ? nlohmann::json(*r.selected + 1) : nlohmann::json(nullptr);
      jr["p"] = std::vector<double>(r.p.values().begin(), r.p.values().end());
      j["rounds"].push_back(jr);
    }
    o.stream() << j.dump(2) << '\n';
  } else {
    o.stream() << bisect_csv(trace);
  }
  if (!report.converged) {
    err << "step budget exhausted before every ratio fell below 1 + eps\n";
    return kExitTolerance;
  }
  return kExitOk;
}

int cmd_pareto(const Scenario& s, std::ostream& out) {
  const LoadVector& loads = need_loads(s);
  require_n2(loads, "pareto");
  const auto cells = pareto_scan(loads, s.grid);
  Output o(s, out);
  if (s.format.value_or(Format::csv) == Format::json) {
    nlohmann::json j = nlohmann::json::array();
    for (const ParetoCell& c : cells) {
      j.push_back({{"p1", c.p1}, {"p2", c.p2}, {"b1", c.b1}, {"b2", c.b2}, {"conv1", c.convenient1},
                   {"conv2", c.convenient2}, {"fair_residual", c.fair_residual}});
    }
    o.stream() << j.dump(2) << '\n';
  } else {
    o.stream() << pareto_csv(cells);
  }
  return kExitOk;
}

int cmd_convenience(const Scenario& s, std::ostream& out) {
  std::vector<double> lambdas;
  if (s.loads) {
    require_n2(*s.loads, "convenience");
    lambdas.push_back(std::max((*s.loads)[0], (*s.loads)[1]));
  } else {
    for (std::size_t i = 0; i < s.grid; ++i) {
      lambdas.push_back(s.lambda_max * static_cast<double>(i) / static_cast<double>(s.grid - 1));
    }
  }
  Output o(s, out);
  if (s.format.value_or(Format::csv) == Format::json) {
    nlohmann::json j = nlohmann::json::array();
    for (double l : lambdas) j.push_back({{"lambda1", l}, {"lambda_c", critical_load(l)}});
    o.stream() << j.dump(2) << '\n';
  } else {
    o.stream() << "lambda1,lambda_c\n";
    for (double l : lambdas) o.stream() << format_number(l) << ',' << format_number(critical_load(l)) << '\n';
  }
  return kExitOk;
}

int cmd_simulate(const Scenario& s, std::ostream& out, std::ostream& err) {
  SimConfig config;
  config.loads = need_loads(s);
  config.coop = need_coop(s);
  config.seed = s.seed;
  config.max_arrivals = s.arrivals;
  const SimReport report = simulate(config);
  err << "seed=" << s.seed << '\n';
  Output o(s, out);
  if (s.format.value_or(Format::json) == Format::csv) {
    o.stream() << sim_summary_csv(report);
  } else {
    nlohmann::json j = to_json(report);
    j["seed"] = s.seed;
    o.stream() << j.dump(2) << '\n';
  }
  return kExitOk;
}

int cmd_protocol(const Scenario& s, std::ostream& out, std::ostream& err) {
  SimConfig config;
  config.loads = need_loads(s);
  config.coop = CoopVector::ones(config.loads.size());
  config.seed = s.seed;
  config.max_arrivals = s.arrivals;
  config.k = s.k;
  config.eps = s.eps.value_or(0.05);
  config.warmup_duration = s.warmup;
  config.rounds = s.rounds;
  config.protocol_enabled = true;
  const ProtocolResult result = run_protocol(config);
  err << "seed=" << s.seed << '\n';

  if (s.trace) {
    std::ofstream t(*s.trace, std::ios::binary);
    if (!t) throw InvalidInput("cannot open trace file " + *s.trace);
    t << trace_jsonl(result.trace);
  }
  Output o(s, out);
  if (s.format.value_or(Format::json) == Format::csv) {
    o.stream() << "node,lambda,p_final\n";
    for (std::size_t i = 0; i < config.loads.size(); ++i) {
      o.stream() << i + 1 << ',' << format_number(config.loads[i]) << ',' << format_number(result.coop[i]) << '\n';
    }
  } else {
    nlohmann::json j;
    j["seed"] = s.seed;
    j["p"] = std::vector<double>(result.coop.values().begin(), result.coop.values().end());
    j["completed"] = result.completed;
    j["starvations"] = result.starvations;
    j["tune_actions"] = result.trace.count(EventKind::tune);
    j["report"] = to_json(result.report);
    o.stream() << j.dump(2) << '\n';
  }
  if (!result.completed) {
    err << "protocol did not finish its laps within the arrival budget\n";
    return kExitTolerance;
  }
  if (result.starvations > 0) {
    err << result.starvations << " token starvation event(s)\n";
    return kExitTolerance;
  }
  return kExitOk;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot read scenario file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fog-to-fog cooperation: exact chain analysis, optimization and protocol simulation", "f2f"};
  app.require_subcommand(1);

  std::map<std::string, std::string> flag_values;
  std::string config_path;
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const Command& c : commands()) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config_path, "Scenario file of key = value lines (flags override)");
    for (const std::string& key : c.keys) sub->add_option("--" + key, flag_values[key]);
    subs.emplace_back(sub, &c);
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    for (const auto& [sub, cmd] : subs) {
      if (!sub->parsed()) continue;
      std::map<std::string, std::string> raw;
      for (const std::string& key : cmd->keys) {
        if (sub->get_option("--" + key)->count() > 0) raw[key] = flag_values[key];
      }
      if (!config_path.empty()) {
        for (const auto& [key, value] : parse_scenario_file(read_file(config_path))) raw.emplace(key, value);
      }
      const Scenario s = make_scenario(raw);
      const std::string name = cmd->name;
      if (name == "solve") return cmd_solve(s, out);
      if (name == "optimal") return cmd_optimal(s, out, err);
      if (name == "bisect") return cmd_bisect(s, out, err);
      if (name == "pareto") return cmd_pareto(s, out);
      if (name == "convenience") return cmd_convenience(s, out);
      if (name == "simulate") return cmd_simulate(s, out, err);
      if (name == "protocol") return cmd_protocol(s, out, err);
    }
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const SolverError& e) {
    err << "error: " << e.what() << '\n';
    return kExitTolerance;
  }
  return kExitInvalid;
}

}  // namespace f2f::cli
