#include <charconv>
#include <cmath>
#include <sstream>

#include "f2f/cli.hpp"

namespace f2f::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw InvalidInput("--" + key + ": expected a number, got '" + text + "'");
  }
  return v;
}

std::uint64_t parse_count(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  // accept 1e6 style counts
  const double v = parse_double(key, t);
  if (v < 0 || v != std::floor(v) || v > 1.8e19) throw InvalidInput("--" + key + ": expected a non-negative integer");
  return static_cast<std::uint64_t>(v);
}

}  // namespace

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) values.push_back(parse_double("list", item));
  return values;
}

std::map<std::string, std::string> parse_scenario_file(const std::string& text) {
  std::map<std::string, std::string> raw;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidInput("scenario line " + std::to_string(lineno) + ": expected key = value");
    }
    raw[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return raw;
}

Scenario make_scenario(const std::map<std::string, std::string>& raw) {
  Scenario s;
  for (const auto& [key, value] : raw) {
    if (key == "loads") {
      s.loads = LoadVector(parse_list(value));
    } else if (key == "coop") {
      s.coop = CoopVector(parse_list(value));
    } else if (key == "eps") {
      s.eps = parse_double(key, value);
      if (!(*s.eps > 0.0)) throw InvalidInput("--eps must be positive");
    } else if (key == "tol") {
      s.tol = parse_double(key, value);
      if (!(s.tol > 0.0)) throw InvalidInput("--tol must be positive");
    } else if (key == "max-iters") {
      s.max_iters = parse_count(key, value);
    } else if (key == "steps") {
      s.steps = parse_count(key, value);
    } else if (key == "seed") {
      s.seed = parse_count(key, value);
    } else if (key == "arrivals") {
      s.arrivals = parse_count(key, value);
      if (s.arrivals < 1) throw InvalidInput("--arrivals must be at least 1");
    } else if (key == "k") {
      s.k = parse_count(key, value);
      if (s.k < 1) throw InvalidInput("--k must be at least 1");
    } else if (key == "warmup") {
      s.warmup = parse_double(key, value);
      if (s.warmup < 0.0) throw InvalidInput("--warmup must be non-negative");
    } else if (key == "rounds") {
      s.rounds = parse_count(key, value);
    } else if (key == "grid") {
      s.grid = parse_count(key, value);
      if (s.grid < 2) throw InvalidInput("--grid must be at least 2");
    } else if (key == "lambda-max") {
      s.lambda_max = parse_double(key, value);
      if (!(s.lambda_max > 0.0)) throw InvalidInput("--lambda-max must be positive");
    } else if (key == "format") {
      if (value == "json") {
        s.format = Format::json;
      } else if (value == "csv") {
        s.format = Format::csv;
      } else {
        throw InvalidInput("--format must be json or csv");
      }
    } else if (key == "out") {
      s.out = value;
    } else if (key == "trace") {
      s.trace = value;
    } else {
      throw InvalidInput("unknown scenario key '" + key + "'");
    }
  }
  if (s.loads && s.coop) require_same_size(*s.loads, *s.coop);
  if (s.loads && s.loads->size() > kMaxDenseNodes) {
    throw InvalidInput("N <= " + std::to_string(kMaxDenseNodes) + " required for dense chain solves");
  }
  return s;
}

}  // namespace f2f::cli
