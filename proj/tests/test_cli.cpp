#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "f2f/cli.hpp"

using namespace f2f;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "f2f_cli_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("solve") {
  SUBCASE("optimal pair point") {
    const Result r = run({"solve", "--loads", "0.9,0.8", "--coop", "1,0.790123"});
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(std::abs(j["blocking"][0].get<double>() - 0.3815) < 1e-4);
    CHECK(std::abs(j["blocking"][1].get<double>() - 0.3350) < 1e-4);
    CHECK(j["pi"].size() == 4);
    CHECK(j["convenient"][0].get<bool>());
  }
  SUBCASE("no cooperation") {
    const Result r = run({"solve", "--loads", "1,1", "--coop", "0,0"});
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j["blocking"][0].get<double>() == doctest::Approx(0.5));
    CHECK(j["blocking"][1].get<double>() == doctest::Approx(0.5));
    CHECK(j["ratios"][0].is_null());
  }
  SUBCASE("single node is rejected") {
    const Result r = run({"solve", "--loads", "0.9", "--coop", "1"});
    CHECK(r.code == 1);
    CHECK(r.err.find("N >= 2 required") != std::string::npos);
  }
  SUBCASE("csv output") {
    const Result r = run({"solve", "--loads", "0.9,0.8,0.7,0.6", "--coop", "1,1,1,1", "--format", "csv"});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("node,lambda,p,b,b0,r_in,r_out,r,convenient\n", 0) == 0);
    CHECK(r.out.find("1.55728") != std::string::npos);
  }
  SUBCASE("input errors") {
    CHECK(run({"solve", "--loads", "0.9,0.8"}).code == 1);
    CHECK(run({"solve", "--loads", "0.9,abc", "--coop", "1,1"}).code == 1);
    CHECK(run({"solve", "--loads", "0.9,0.8", "--coop", "1,1.5"}).code == 1);
    CHECK(run({"solve", "--loads", "0.9,0.8", "--coop", "1,1,1"}).code == 1);
    CHECK(run({"solve", "--loads", "0.9,0.8", "--coop", "1,1", "--format", "xml"}).code == 1);
    CHECK(run({"solve", "--bogus", "1"}).code == 1);
    CHECK(run({}).code == 1);
    const Result big = run({"solve", "--loads", "0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5", "--coop",
                            "1,1,1,1,1,1,1,1,1,1,1,1,1"});
    CHECK(big.code == 1);
  }
}

TEST_CASE("optimal") {
  SUBCASE("four nodes") {
    const Result r = run({"optimal", "--loads", "0.9,0.8,0.7,0.6"});
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    const auto p = j["p"].get<std::vector<double>>();
    CHECK(p[0] == 1.0);
    CHECK(p[1] > p[2]);
    CHECK(p[2] > p[3]);
    CHECK(j["g"].get<double>() < 1e-6);
  }
  SUBCASE("equal loads") {
    const json j = json::parse(run({"optimal", "--loads", "0.5,0.5"}).out);
    CHECK(j["p"][0].get<double>() == doctest::Approx(1.0));
    CHECK(j["p"][1].get<double>() == doctest::Approx(1.0));
  }
  SUBCASE("caller order with swap note") {
    const Result r = run({"optimal", "--loads", "0.8,0.9"});
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j["p"][0].get<double>() == doctest::Approx(0.790123).epsilon(1e-6));
    CHECK(j["p"][1].get<double>() == 1.0);
    CHECK(j["analytic"]["swap_applied"].get<bool>());
    CHECK(j["analytic"]["p"][0].get<double>() == doctest::Approx(0.790123).epsilon(1e-6));
    CHECK(j.contains("note"));
  }
  SUBCASE("iteration budget") {
    const Result r = run({"optimal", "--loads", "0.9,0.8,0.7,0.6", "--max-iters", "1"});
    CHECK(r.code == 2);
  }
}

TEST_CASE("bisect") {
  SUBCASE("table scenario") {
    const Result r = run({"bisect", "--loads", "0.9,0.8,0.7,0.6"});
    REQUIRE(r.code == 0);
    const auto rows = cli::parse_bisect_csv(r.out);
    REQUIRE(rows.size() >= 2);
    const double first[] = {0.675, 0.875, 1.154, 1.557};
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(*rows[0].ratios[i] - first[i]) <= 1e-3);
    CHECK(rows[0].selected == std::optional<std::size_t>{4});
    CHECK_FALSE(rows.back().selected.has_value());
  }
  SUBCASE("loose deadband") {
    const Result r = run({"bisect", "--loads", "0.9,0.8,0.7,0.6", "--eps", "0.5"});
    REQUIRE(r.code == 0);
    CHECK(cli::parse_bisect_csv(r.out).size() <= 2);
  }
  SUBCASE("symmetric loads") {
    const Result r = run({"bisect", "--loads", "0.5,0.5,0.5"});
    REQUIRE(r.code == 0);
    const auto rows = cli::parse_bisect_csv(r.out);
    REQUIRE(rows.size() == 1);
    CHECK_FALSE(rows[0].selected.has_value());
  }
  SUBCASE("budget exhausted") {
    const Result r = run({"bisect", "--loads", "0.9,0.8,0.7,0.6", "--steps", "2"});
    CHECK(r.code == 2);
    CHECK(cli::parse_bisect_csv(r.out).size() == 3);
  }
}

TEST_CASE("bisect CSV round-trips") {
  const auto [report, trace] = centralized_bisect(LoadVector{0.9, 0.8, 0.7, 0.6}, 1e-2);
  const auto rows = cli::parse_bisect_csv(cli::bisect_csv(trace));
  REQUIRE(rows.size() == trace.rounds.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    CHECK(rows[k].round == k + 1);
    const BisectRound& r = trace.rounds[k];
    CHECK(rows[k].selected == (r.selected ? std::optional<std::size_t>{*r.selected + 1} : std::nullopt));
    for (std::size_t i = 0; i < 4; ++i) {
      // six significant digits: relative rounding up to 5e-6
      CHECK(*rows[k].ratios[i] == doctest::Approx(*r.ratios[i]).epsilon(5e-6));
      CHECK(rows[k].p[i] == doctest::Approx(r.p[i]).epsilon(5e-6));
    }
  }
}

TEST_CASE("pareto and convenience") {
  SUBCASE("pareto corners") {
    const Result r = run({"pareto", "--loads", "0.9,0.8", "--grid", "3"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("\n0,0,") != std::string::npos);
    CHECK(r.out.find("\n1,1,") != std::string::npos);
  }
  SUBCASE("light node loses at full cooperation") {
    const Result r = run({"pareto", "--loads", "0.95,0.25", "--grid", "2"});
    REQUIRE(r.code == 0);
    std::istringstream ss(r.out);
    std::string line, last;
    while (std::getline(ss, line)) {
      if (!line.empty()) last = line;
    }
    CHECK(last.rfind("1,1,", 0) == 0);
    // p1,p2,b1,b2,conv1,conv2,fair_residual
    std::vector<std::string> cells;
    std::istringstream ls(last);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    REQUIRE(cells.size() == 7);
    CHECK(cells[4] == "1");
    CHECK(cells[5] == "0");
  }
  SUBCASE("threshold") {
    const Result r = run({"convenience", "--loads", "0.95,0.25"});
    REQUIRE(r.code == 0);
    CHECK(r.out == "lambda1,lambda_c\n0.95,0.396424\n");
    const Result sweep = run({"convenience", "--grid", "5", "--lambda-max", "3"});
    CHECK(sweep.out.find("\n3,1\n") != std::string::npos);
  }
  SUBCASE("pareto needs two nodes") { CHECK(run({"pareto", "--loads", "0.9,0.8,0.7"}).code == 1); }
}

TEST_CASE("simulate") {
  SUBCASE("baseline") {
    const Result r = run({"simulate", "--loads", "0.9,0.8", "--coop", "0,0", "--arrivals", "200000", "--seed", "3"});
    REQUIRE(r.code == 0);
    CHECK(r.err.find("seed=3") != std::string::npos);
    const json j = json::parse(r.out);
    for (std::size_t i = 0; i < 2; ++i) {
      const double l = i == 0 ? 0.9 : 0.8;
      const double b = j["blocking"][i]["value"].get<double>();
      const double se = j["blocking"][i]["std_error"].get<double>();
      CHECK(std::abs(b - l / (1 + l)) <= 3 * se);
    }
  }
  SUBCASE("byte-identical reruns") {
    const auto a = scratch("sim_a.json"), b = scratch("sim_b.json");
    const std::vector<std::string> base = {"simulate", "--loads", "0.9,0.8,0.7", "--coop", "1,0.5,0.2",
                                           "--arrivals", "50000", "--seed", "9", "--out"};
    auto args_a = base, args_b = base;
    args_a.push_back(a.string());
    args_b.push_back(b.string());
    REQUIRE(run(args_a).code == 0);
    REQUIRE(run(args_b).code == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK_FALSE(slurp(a).empty());
  }
  SUBCASE("summary csv") {
    const Result r = run({"simulate", "--loads", "0.9,0.8", "--coop", "1,1", "--arrivals", "10000", "--format", "csv"});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("node,arrivals,blocked,served_local,served_remote,b,b_se,r_in,r_out,r,r_se\n", 0) == 0);
  }
}

TEST_CASE("simulation JSON round-trips") {
  SimConfig c;
  c.loads = LoadVector{0.9, 0.8, 0.7};
  c.coop = CoopVector{1.0, 0.5, 0.0};
  c.max_arrivals = 30'000;
  const SimReport r = simulate(c);
  const json j = json::parse(cli::to_json(r).dump());
  CHECK(j["arrivals"].get<std::vector<std::uint64_t>>() == r.arrivals);
  CHECK(j["accepted"].get<std::vector<std::vector<std::uint64_t>>>() == r.accepted);
  CHECK(j["sim_time"].get<double>() == r.sim_time);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(j["blocking"][i]["value"].get<double>() == r.blocking[i].value);
    CHECK(j["blocking"][i]["std_error"].get<double>() == r.blocking[i].std_error);
    CHECK(j["ratios"][i].is_null() == !r.ratios[i].has_value());
  }
}

TEST_CASE("protocol") {
  const auto trace = scratch("trace.jsonl");
  const auto trace2 = scratch("trace2.jsonl");
  const std::vector<std::string> args = {"protocol", "--loads", "0.9,0.8,0.7,0.6", "--seed", "42",
                                         "--arrivals", "3000000", "--trace"};
  auto a1 = args, a2 = args;
  a1.push_back(trace.string());
  a2.push_back(trace2.string());
  const Result r = run(a1);
  const Result r2 = run(a2);
  CHECK(r.err.find("seed=42") != std::string::npos);
  CHECK(r.out == r2.out);
  CHECK(slurp(trace) == slurp(trace2));

  const json j = json::parse(r.out);
  const auto p = j["p"].get<std::vector<double>>();
  const SolveReport target = fixed_point(LoadVector{0.9, 0.8, 0.7, 0.6});
  double worst = 0.0;
  for (std::size_t i = 0; i < 4; ++i) worst = std::max(worst, std::abs(p[i] - target.p_star[i]));
  MESSAGE("seed 42 protocol: p = " << to_string(p) << ", max deviation from fixed point " << worst);
  CHECK(r.code == (j["completed"].get<bool>() && j["starvations"].get<std::size_t>() == 0 ? 0 : 2));
  CHECK(p[0] == 1.0);

  // trace round-trip: re-serializing the parsed events reproduces the file
  const ProtocolTrace parsed = cli::parse_trace_jsonl(slurp(trace));
  CHECK(cli::trace_jsonl(parsed) == slurp(trace));
  CHECK(parsed.count(EventKind::ring_order) == 1);

  const Result cut = run({"protocol", "--loads", "0.9,0.8", "--arrivals", "1000"});
  CHECK(cut.code == 2);
}

TEST_CASE("scenario files") {
  const auto file = scratch("scenario.txt");
  {
    std::ofstream f(file);
    f << "# two-node optimum\nloads = 0.9, 0.8\ncoop = 1, 0\n\nformat = json  # default anyway\n";
  }
  SUBCASE("file values") {
    const Result r = run({"solve", "--config", file.string()});
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out)["coop"][1].get<double>() == 0.0);
  }
  SUBCASE("flags override the file") {
    const Result r = run({"solve", "--config", file.string(), "--coop", "1,1"});
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out)["coop"][1].get<double>() == 1.0);
  }
  SUBCASE("unknown keys and missing files") {
    CHECK_THROWS_AS(cli::make_scenario({{"lods", "1,1"}}), InvalidInput);
    CHECK_THROWS_AS(cli::parse_scenario_file("loads 1,1\n"), InvalidInput);
    CHECK(run({"solve", "--config", scratch("missing.txt").string()}).code == 1);
  }
}

TEST_CASE("number formatting") {
  CHECK(cli::format_number(0.396424) == "0.396424");
  CHECK(cli::format_number(1.0) == "1");
  CHECK(cli::format_number(1.5572843) == "1.55728");
  CHECK(cli::parse_list("0.9, 0.8,0.7") == std::vector<double>{0.9, 0.8, 0.7});
}
