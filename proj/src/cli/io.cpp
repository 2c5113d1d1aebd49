#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "f2f/cli.hpp"

namespace f2f::cli {

using nlohmann::json;

namespace {

json vec(std::span<const double> v) { return json(std::vector<double>(v.begin(), v.end())); }

json matrix(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json ratios_json(const std::vector<Ratio>& ratios) {
  json a = json::array();
  for (const Ratio& r : ratios) a.push_back(r ? json(*r) : json(nullptr));
  return a;
}

json estimate(const Estimate& e) {
  return {{"value", e.value}, {"std_error", std::isfinite(e.std_error) ? json(e.std_error) : json(nullptr)}};
}

// non-finite doubles travel as null
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double number_from(const json& j) { return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>(); }

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, sep)) cells.push_back(cell);
  if (!line.empty() && line.back() == sep) cells.emplace_back();
  return cells;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

json to_json(const MetricsReport& m, const SteadyState& pi, const LoadVector& loads, const CoopVector& coop) {
  json j;
  j["loads"] = vec(loads.values());
  j["coop"] = vec(coop.values());
  j["pi"] = std::vector<double>(pi.vector().data(), pi.vector().data() + pi.vector().size());
  j["blocking"] = m.blocking;
  j["baselines"] = m.baselines;
  j["convenient"] = std::vector<bool>(m.convenient);
  j["accept"] = matrix(m.accept);
  j["r_in"] = m.r_in;
  j["r_out"] = m.r_out;
  j["ratios"] = ratios_json(m.ratios);
  return j;
}

json to_json(const SolveReport& r) {
  return {{"p", vec(r.p_star.values())}, {"iterations", r.iterations}, {"residual", number(r.residual)},
          {"feasible", r.feasible},      {"normalized", r.normalized}, {"converged", r.converged}};
}

json to_json(const SimReport& r) {
  json j;
  j["sim_time"] = r.sim_time;
  j["arrivals"] = r.arrivals;
  j["blocked"] = r.blocked;
  j["served_local"] = r.served_local;
  j["served_remote"] = r.served_remote;
  j["accepted"] = r.accepted;
  json b = json::array();
  for (const Estimate& e : r.blocking) b.push_back(estimate(e));
  j["blocking"] = b;
  json a = json::array();
  for (const auto& row : r.accept_rate) {
    json jr = json::array();
    for (const Estimate& e : row) jr.push_back(estimate(e));
    a.push_back(jr);
  }
  j["accept_rate"] = a;
  json rs = json::array();
  for (const auto& e : r.ratios) rs.push_back(e ? estimate(*e) : json(nullptr));
  j["ratios"] = rs;
  return j;
}

json to_json(const TraceEvent& e) {
  json j;
  j["t"] = e.time;
  j["event"] = to_string(e.kind);
  if (e.node) j["node"] = *e.node + 1;
  j["lap"] = e.lap;
  if (!e.ratios.empty()) {
    json r = json::array();
    for (double v : e.ratios) r.push_back(number(v));
    j["ratios"] = r;
  }
  if (!e.ring.empty()) {
    json ring = json::array();
    for (std::size_t n : e.ring) ring.push_back(n + 1);
    j["ring"] = ring;
  }
  if (e.tune) {
    const TuneAction& t = *e.tune;
    j["tune"] = {{"in", t.in}, {"out", t.out}, {"r", number(t.r)}, {"lo", t.lo},
                 {"hi", t.hi}, {"p_old", t.p_old}, {"p_new", t.p_new}};
  }
  if (e.cause) j["cause"] = to_string(*e.cause);
  if (!e.coop.empty()) j["coop"] = e.coop;
  if (!e.loads.empty()) j["loads"] = e.loads;
  return j;
}

std::string metrics_csv(const MetricsReport& m, const LoadVector& loads, const CoopVector& coop) {
  std::ostringstream os;
  os << "node,lambda,p,b,b0,r_in,r_out,r,convenient\n";
  for (std::size_t i = 0; i < loads.size(); ++i) {
    os << i + 1 << ',' << format_number(loads[i]) << ',' << format_number(coop[i]) << ','
       << format_number(m.blocking[i]) << ',' << format_number(m.baselines[i]) << ',' << format_number(m.r_in[i])
       << ',' << format_number(m.r_out[i]) << ',' << (m.ratios[i] ? format_number(*m.ratios[i]) : "") << ','
       << (m.convenient[i] ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string bisect_csv(const BisectTrace& trace) {
  std::ostringstream os;
  const std::size_t n = trace.rounds.empty() ? 0 : trace.rounds.front().ratios.size();
  os << "round";
  for (std::size_t i = 1; i <= n; ++i) os << ",r_" << i;
  os << ",selected";
  for (std::size_t i = 1; i <= n; ++i) os << ",p_" << i;
  os << '\n';
  for (std::size_t k = 0; k < trace.rounds.size(); ++k) {
    const BisectRound& r = trace.rounds[k];
    os << k + 1;
    for (const Ratio& v : r.ratios) os << ',' << (v ? format_number(*v) : "");
    os << ',';
    if (r.selected) os << *r.selected + 1;
    for (double p : r.p.values()) os << ',' << format_number(p);
    os << '\n';
  }
  return os.str();
}

std::vector<BisectRow> parse_bisect_csv(const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  if (!std::getline(ss, line)) throw InvalidInput("empty bisect CSV");
  const std::size_t columns = split(line, ',').size();
  if (columns < 4 || (columns - 2) % 2 != 0) throw InvalidInput("malformed bisect CSV header");
  const std::size_t n = (columns - 2) / 2;
  std::vector<BisectRow> rows;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != columns) throw InvalidInput("malformed bisect CSV row");
    BisectRow row;
    row.round = std::stoul(cells[0]);
    for (std::size_t i = 0; i < n; ++i) {
      row.ratios.push_back(cells[1 + i].empty() ? std::nullopt : std::optional<double>(std::stod(cells[1 + i])));
    }
    if (!cells[1 + n].empty()) row.selected = std::stoul(cells[1 + n]);
    for (std::size_t i = 0; i < n; ++i) row.p.push_back(std::stod(cells[2 + n + i]));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string pareto_csv(const std::vector<ParetoCell>& cells) {
  std::ostringstream os;
  os << "p1,p2,b1,b2,conv1,conv2,fair_residual\n";
  for (const ParetoCell& c : cells) {
    os << format_number(c.p1) << ',' << format_number(c.p2) << ',' << format_number(c.b1) << ','
       << format_number(c.b2) << ',' << (c.convenient1 ? 1 : 0) << ',' << (c.convenient2 ? 1 : 0) << ','
       << format_number(c.fair_residual) << '\n';
  }
  return os.str();
}

std::string sim_summary_csv(const SimReport& r) {
  std::ostringstream os;
  os << "node,arrivals,blocked,served_local,served_remote,b,b_se,r_in,r_out,r,r_se\n";
  const std::size_t n = r.arrivals.size();
  for (std::size_t i = 0; i < n; ++i) {
    double in = 0.0, out = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      in += r.accept_rate[j][i].value;
      out += r.accept_rate[i][j].value;
    }
    os << i + 1 << ',' << r.arrivals[i] << ',' << r.blocked[i] << ',' << r.served_local[i] << ','
       << r.served_remote[i] << ',' << format_number(r.blocking[i].value) << ','
       << format_number(r.blocking[i].std_error) << ',' << format_number(in) << ',' << format_number(out) << ','
       << (r.ratios[i] ? format_number(r.ratios[i]->value) : "") << ','
       << (r.ratios[i] ? format_number(r.ratios[i]->std_error) : "") << '\n';
  }
  return os.str();
}

std::string trace_jsonl(const ProtocolTrace& trace) {
  std::string s;
  for (const TraceEvent& e : trace.events) {
    s += to_json(e).dump();
    s += '\n';
  }
  return s;
}

ProtocolTrace parse_trace_jsonl(const std::string& text) {
  static const std::map<std::string, EventKind> kinds = {
      {"warmup_start", EventKind::warmup_start},     {"warmup_end", EventKind::warmup_end},
      {"ring_order", EventKind::ring_order},         {"token_pass", EventKind::token_pass},
      {"tune", EventKind::tune},                     {"starvation", EventKind::starvation},
      {"protocol_end", EventKind::protocol_end},     {"load_change", EventKind::load_change},
      {"retune_trigger", EventKind::retune_trigger}, {"retune_failed", EventKind::retune_failed},
      {"horizon_reached", EventKind::horizon_reached}};
  static const std::map<std::string, Termination> causes = {{"ratio_converged", Termination::ratio_converged},
                                                            {"interval_collapsed", Termination::interval_collapsed},
                                                            {"starved", Termination::starved}};
  ProtocolTrace trace;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    TraceEvent e;
    e.time = j.at("t").get<double>();
    e.kind = kinds.at(j.at("event").get<std::string>());
    if (j.contains("node")) e.node = j["node"].get<std::size_t>() - 1;
    e.lap = j.at("lap").get<std::size_t>();
    if (j.contains("ratios")) {
      for (const json& v : j["ratios"]) e.ratios.push_back(number_from(v));
    }
    if (j.contains("ring")) {
      for (const json& v : j["ring"]) e.ring.push_back(v.get<std::size_t>() - 1);
    }
    if (j.contains("tune")) {
      const json& t = j["tune"];
      e.tune = TuneAction{t.at("in").get<std::uint64_t>(), t.at("out").get<std::uint64_t>(), number_from(t.at("r")),
                          t.at("lo").get<double>(),        t.at("hi").get<double>(),         t.at("p_old").get<double>(),
                          t.at("p_new").get<double>()};
    }
    if (j.contains("cause")) e.cause = causes.at(j["cause"].get<std::string>());
    if (j.contains("coop")) e.coop = j["coop"].get<std::vector<double>>();
    if (j.contains("loads")) e.loads = j["loads"].get<std::vector<double>>();
    trace.events.push_back(std::move(e));
  }
  return trace;
}

}  // namespace f2f::cli
