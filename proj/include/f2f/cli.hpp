#pragma once

// Command-line front end: scenario parsing, serialization and subcommands.

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "f2f/closed_form.hpp"
#include "f2f/optimizer.hpp"
#include "f2f/sim.hpp"

namespace f2f::cli {

enum class Format { json, csv };

/// Everything a subcommand may need; values already validated.
struct Scenario {
  std::optional<LoadVector> loads;
  std::optional<CoopVector> coop;
  std::optional<double> eps;
  double tol = 1e-9;
  std::size_t max_iters = 100;
  std::size_t steps = 1000;
  std::uint64_t seed = 1;
  std::uint64_t arrivals = 1'000'000;
  std::size_t k = 200;
  double warmup = 0.0;
  std::size_t rounds = 6;
  std::size_t grid = 21;
  double lambda_max = 2.0;
  std::optional<Format> format;
  std::optional<std::string> out;
  std::optional<std::string> trace;
};

/// Parses "key = value" lines ('#' starts a comment) into a map.
std::map<std::string, std::string> parse_scenario_file(const std::string& text);

/// Builds a Scenario from raw string values keyed by long flag name.
Scenario make_scenario(const std::map<std::string, std::string>& raw);

std::vector<double> parse_list(const std::string& text);

/// Decimal with 6 significant digits.
std::string format_number(double v);

// --- serializers -----------------------------------------------------------

nlohmann::json to_json(const MetricsReport& m, const SteadyState& pi, const LoadVector& loads, const CoopVector& coop);
nlohmann::json to_json(const SolveReport& r);
nlohmann::json to_json(const SimReport& r);
nlohmann::json to_json(const TraceEvent& e);

std::string metrics_csv(const MetricsReport& m, const LoadVector& loads, const CoopVector& coop);
std::string bisect_csv(const BisectTrace& trace);
std::string pareto_csv(const std::vector<ParetoCell>& cells);
std::string sim_summary_csv(const SimReport& r);
std::string trace_jsonl(const ProtocolTrace& trace);

/// One parsed row of the bisect CSV.
struct BisectRow {
  std::size_t round;
  std::vector<std::optional<double>> ratios;
  std::optional<std::size_t> selected;  ///< 1-based node id
  std::vector<double> p;
};
std::vector<BisectRow> parse_bisect_csv(const std::string& text);

ProtocolTrace parse_trace_jsonl(const std::string& text);

/// Entry point shared by the binary and the tests. Returns the exit code:
/// 0 success, 1 invalid input, 2 a computation missed its tolerance or budget.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace f2f::cli
