#pragma once

// Seeded discrete-event simulation of N cooperating single-server nodes and
// of the token-ring tuning protocol that runs on top of them.
//
// Every node owns a random stream (its arrival gaps and the service times of
// tasks it executes); one more stream drives probe targets and accept coins.
// All streams derive from the master seed through std::seed_seq, so a run is
// a pure function of its configuration.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "f2f/metrics.hpp"

namespace f2f {

struct SimConfig {
  LoadVector loads;
  CoopVector coop;
  std::uint64_t seed = 1;
  std::uint64_t max_arrivals = 1'000'000;
  std::size_t k = 200;           ///< counter threshold that triggers a tune
  double eps = 0.05;
  double warmup_duration = 0.0;  ///< 0 selects a duration from the model (min flow * dT >= 10 k)
  std::size_t rounds = 6;        ///< token laps
  bool protocol_enabled = false;
  std::size_t batches = 30;      ///< batch-means groups for standard errors
  double token_timeout = 0.0;    ///< 0 means one warm-up duration
  std::size_t monitor_factor = 4;  ///< load-change monitor window = monitor_factor * k
  double monitor_z = 4.0;          ///< significance required before a retune trigger
};

/// Throws InvalidInput on any violated configuration invariant.
void validate(const SimConfig& config);

/// Warm-up length giving an expected min(in_j, out_j) of 10 k at p = 1.
double default_warmup_duration(const LoadVector& loads, std::size_t k);

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

struct SimReport {
  // per originating node
  std::vector<std::uint64_t> arrivals, blocked, served_local, served_remote;
  /// accepted[i][j]: tasks from node i executed by node j
  std::vector<std::vector<std::uint64_t>> accepted;
  std::vector<Estimate> blocking;
  std::vector<std::vector<Estimate>> accept_rate;
  std::vector<std::optional<Estimate>> ratios;
  double sim_time = 0.0;
};

/// Plain loss-system run at fixed cooperation probabilities.
SimReport simulate(const SimConfig& config);

enum class EventKind {
  warmup_start,
  warmup_end,
  ring_order,
  token_pass,
  tune,
  starvation,
  protocol_end,
  load_change,
  retune_trigger,
  retune_failed,
  horizon_reached,
};

enum class Termination { ratio_converged, interval_collapsed, starved };

std::string to_string(EventKind kind);
std::string to_string(Termination cause);

struct TuneAction {
  std::uint64_t in = 0, out = 0;
  double r = 0.0;  ///< +inf when out = 0
  double lo = 0.0, hi = 0.0;
  double p_old = 0.0, p_new = 0.0;
};

struct TraceEvent {
  double time = 0.0;
  EventKind kind{};
  std::optional<std::size_t> node;
  std::size_t lap = 0;
  std::vector<double> ratios;      ///< warmup_end: per-node warm-up ratios (+inf if out = 0)
  std::vector<std::size_t> ring;   ///< ring_order: token order; node field holds the anchor
  std::optional<TuneAction> tune;
  std::optional<Termination> cause;  ///< token_pass: why the holder gave up the token
  std::vector<double> coop;        ///< protocol_end / load_change: probabilities at that time
  std::vector<double> loads;       ///< load_change: new rates
};

struct ProtocolTrace {
  std::vector<TraceEvent> events;

  std::size_t count(EventKind kind) const;
  std::vector<TuneAction> tune_actions() const;
};

struct ProtocolResult {
  SimReport report;
  ProtocolTrace trace;
  CoopVector coop;
  bool completed = false;   ///< every requested lap finished inside the arrival budget
  std::size_t starvations = 0;
};

/// Stateful protocol run; keeps the event loop alive so loads can change later.
class ProtocolSession {
 public:
  explicit ProtocolSession(SimConfig config);
  ~ProtocolSession();
  ProtocolSession(ProtocolSession&&) noexcept;
  ProtocolSession& operator=(ProtocolSession&&) noexcept;

  /// Warm-up followed by the configured number of token laps.
  void run();

  /// Switch arrival rates, then keep simulating for extra_arrivals arrivals
  /// while every node watches its ratio. A significant departure from the
  /// deadband starts one tuning lap; when that lap leaves a ring node pinned
  /// near p = 1 (the heaviest node has changed) a fresh warm-up and full
  /// protocol follow.
  void change_loads(const LoadVector& loads, std::uint64_t extra_arrivals);

  ProtocolResult result() const;

 private:
  class Impl;
  std::unique_ptr<Impl> impl_;
};

ProtocolResult run_protocol(const SimConfig& config);

ProtocolResult trigger_retune(ProtocolSession& session, const LoadVector& new_loads, std::uint64_t extra_arrivals);

}  // namespace f2f
