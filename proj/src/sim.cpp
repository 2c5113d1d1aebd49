#include "f2f/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <random>

namespace f2f {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class Stream {
 public:
  Stream(std::uint64_t master, std::uint32_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32), index,
                      0x66326632U};
    engine_.seed(seq);
  }

  /// Uniform on [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }
  std::size_t below(std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n)));
  }

 private:
  std::mt19937_64 engine_;
};

enum class Placement { local, remote, blocked };

struct ArrivalOutcome {
  std::size_t origin;
  Placement placement;
  std::size_t executor;  ///< meaningful unless blocked
};

class LossSystem {
 public:
  LossSystem(const LoadVector& loads, const CoopVector& coop, std::uint64_t seed)
      : loads_(loads.values().begin(), loads.values().end()),
        coop_(coop.values().begin(), coop.values().end()),
        busy_(loads_.size(), false),
        generation_(loads_.size(), 0),
        probe_(seed, static_cast<std::uint32_t>(loads_.size())) {
    streams_.reserve(loads_.size());
    for (std::size_t i = 0; i < loads_.size(); ++i) streams_.emplace_back(seed, static_cast<std::uint32_t>(i));
    for (std::size_t i = 0; i < loads_.size(); ++i) schedule_arrival(i);
  }

  double now() const { return now_; }
  std::size_t nodes() const { return loads_.size(); }
  double coop(std::size_t i) const { return coop_[i]; }
  std::vector<double> coop() const { return coop_; }
  void set_coop(std::size_t i, double p) { coop_[i] = p; }

  void set_loads(const LoadVector& loads) {
    loads_.assign(loads.values().begin(), loads.values().end());
    // pending gaps were drawn at the old rates; memorylessness lets us redraw from now
    for (std::size_t i = 0; i < loads_.size(); ++i) {
      ++generation_[i];
      schedule_arrival(i);
    }
  }

  ArrivalOutcome next_arrival() {
    for (;;) {
      const Event ev = queue_.top();
      queue_.pop();
      if (ev.arrival && ev.generation != generation_[ev.node]) continue;
      now_ = ev.time;
      if (!ev.arrival) {
        busy_[ev.node] = false;
        continue;
      }
      schedule_arrival(ev.node);
      return place(ev.node);
    }
  }

 private:
  struct Event {
    double time;
    std::uint64_t seq;
    bool arrival;
    std::size_t node;
    std::uint64_t generation;

    bool operator>(const Event& other) const {
      return time != other.time ? time > other.time : seq > other.seq;
    }
  };

  void push(double time, bool arrival, std::size_t node) {
    queue_.push(Event{time, next_seq_++, arrival, node, generation_[node]});
  }

  void schedule_arrival(std::size_t i) { push(now_ + streams_[i].exponential(loads_[i]), true, i); }

  void start_service(std::size_t executor) {
    busy_[executor] = true;
    push(now_ + streams_[executor].exponential(1.0), false, executor);
  }

  ArrivalOutcome place(std::size_t origin) {
    if (!busy_[origin]) {
      start_service(origin);
      return {origin, Placement::local, origin};
    }
    std::size_t target = probe_.below(nodes() - 1);
    if (target >= origin) ++target;
    const double coin = probe_.uniform();
    if (!busy_[target] && coin < coop_[target]) {
      start_service(target);
      return {origin, Placement::remote, target};
    }
    return {origin, Placement::blocked, target};
  }

  std::vector<double> loads_;
  std::vector<double> coop_;
  std::vector<bool> busy_;
  std::vector<std::uint64_t> generation_;
  std::vector<Stream> streams_;
  Stream probe_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
  std::uint64_t next_seq_ = 0;
  double now_ = 0.0;
};

/// Accumulates run totals and batch-means groups.
class BatchStats {
 public:
  BatchStats(std::size_t nodes, std::uint64_t batch_size)
      : n_(nodes), batch_size_(std::max<std::uint64_t>(1, batch_size)) {
    totals_ = Counts(n_);
    current_ = Counts(n_);
  }

  void record(const ArrivalOutcome& o, double now) {
    for (Counts* c : {&totals_, &current_}) {
      ++c->arrivals[o.origin];
      switch (o.placement) {
        case Placement::local:
          ++c->local[o.origin];
          break;
        case Placement::remote:
          ++c->remote[o.origin];
          ++c->accepted[o.origin * n_ + o.executor];
          break;
        case Placement::blocked:
          ++c->blocked[o.origin];
          break;
      }
    }
    if (++in_batch_ == batch_size_) {
      current_.duration = now - batch_start_;
      batches_.push_back(std::move(current_));
      current_ = Counts(n_);
      batch_start_ = now;
      in_batch_ = 0;
    }
  }

  SimReport finish(double now) const {
    SimReport r;
    r.sim_time = now;
    r.arrivals = totals_.arrivals;
    r.blocked = totals_.blocked;
    r.served_local = totals_.local;
    r.served_remote = totals_.remote;
    r.accepted.assign(n_, std::vector<std::uint64_t>(n_, 0));
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) r.accepted[i][j] = totals_.accepted[i * n_ + j];
    }

    r.blocking.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      std::vector<double> samples;
      for (const Counts& b : batches_) {
        if (b.arrivals[i] > 0) samples.push_back(double(b.blocked[i]) / double(b.arrivals[i]));
      }
      const double value = totals_.arrivals[i] ? double(totals_.blocked[i]) / double(totals_.arrivals[i]) : 0.0;
      r.blocking[i] = {value, std_error(samples)};
    }

    r.accept_rate.assign(n_, std::vector<Estimate>(n_));
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        std::vector<double> samples;
        for (const Counts& b : batches_) {
          if (b.duration > 0.0) samples.push_back(double(b.accepted[i * n_ + j]) / b.duration);
        }
        r.accept_rate[i][j] = {now > 0.0 ? double(totals_.accepted[i * n_ + j]) / now : 0.0, std_error(samples)};
      }
    }

    // ratio of mean flows; delta-method error from per-batch flow rates
    r.ratios.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      double in_total = 0.0, out_total = 0.0;
      for (std::size_t j = 0; j < n_; ++j) {
        in_total += double(totals_.accepted[j * n_ + i]);
        out_total += double(totals_.accepted[i * n_ + j]);
      }
      if (out_total == 0.0) continue;
      const double ratio = in_total / out_total;
      std::vector<double> ins, outs;
      for (const Counts& b : batches_) {
        if (b.duration <= 0.0) continue;
        double bi = 0.0, bo = 0.0;
        for (std::size_t j = 0; j < n_; ++j) {
          bi += double(b.accepted[j * n_ + i]);
          bo += double(b.accepted[i * n_ + j]);
        }
        ins.push_back(bi / b.duration);
        outs.push_back(bo / b.duration);
      }
      double se = kNaN;
      if (ins.size() >= 2) {
        const double m = static_cast<double>(ins.size());
        const double mi = std::accumulate(ins.begin(), ins.end(), 0.0) / m;
        const double mo = std::accumulate(outs.begin(), outs.end(), 0.0) / m;
        double vi = 0.0, vo = 0.0, cov = 0.0;
        for (std::size_t k = 0; k < ins.size(); ++k) {
          vi += (ins[k] - mi) * (ins[k] - mi);
          vo += (outs[k] - mo) * (outs[k] - mo);
          cov += (ins[k] - mi) * (outs[k] - mo);
        }
        vi /= (m - 1) * m;
        vo /= (m - 1) * m;
        cov /= (m - 1) * m;
        const double var = (vi + ratio * ratio * vo - 2.0 * ratio * cov) / (mo * mo);
        se = std::sqrt(std::max(0.0, var));
      }
      r.ratios[i] = Estimate{ratio, se};
    }
    return r;
  }

 private:
  struct Counts {
    Counts() = default;
    explicit Counts(std::size_t n)
        : arrivals(n, 0), blocked(n, 0), local(n, 0), remote(n, 0), accepted(n * n, 0) {}
    std::vector<std::uint64_t> arrivals, blocked, local, remote, accepted;
    double duration = 0.0;
  };

  static double std_error(const std::vector<double>& samples) {
    if (samples.size() < 2) return kNaN;
    const double m = static_cast<double>(samples.size());
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / m;
    double ss = 0.0;
    for (double s : samples) ss += (s - mean) * (s - mean);
    return std::sqrt(ss / (m - 1) / m);
  }

  std::size_t n_;
  std::uint64_t batch_size_;
  Counts totals_;
  Counts current_;
  std::vector<Counts> batches_;
  std::uint64_t in_batch_ = 0;
  double batch_start_ = 0.0;
};

double ratio_of(std::uint64_t in, std::uint64_t out) {
  return out == 0 ? kInf : static_cast<double>(in) / static_cast<double>(out);
}

}  // namespace

void validate(const SimConfig& config) {
  require_same_size(config.loads, config.coop);
  if (config.max_arrivals < 1) throw InvalidInput("max_arrivals must be at least 1");
  if (config.k < 1) throw InvalidInput("k must be at least 1");
  if (!(config.eps > 0.0)) throw InvalidInput("eps must be positive");
  if (config.warmup_duration < 0.0) throw InvalidInput("warm-up duration must be non-negative");
  if (config.token_timeout < 0.0) throw InvalidInput("token timeout must be non-negative");
  if (config.batches < 2) throw InvalidInput("at least 2 batches are needed for standard errors");
  if (config.monitor_factor < 1) throw InvalidInput("monitor_factor must be at least 1");
}

double default_warmup_duration(const LoadVector& loads, std::size_t k) {
  const MetricsReport m = evaluate(loads, CoopVector::ones(loads.size()));
  double slowest = kInf;
  for (std::size_t i = 0; i < loads.size(); ++i) slowest = std::min({slowest, m.r_in[i], m.r_out[i]});
  return 10.0 * static_cast<double>(k) / slowest;
}

SimReport simulate(const SimConfig& config) {
  validate(config);
  LossSystem system(config.loads, config.coop, config.seed);
  BatchStats stats(config.loads.size(), config.max_arrivals / config.batches);
  for (std::uint64_t a = 0; a < config.max_arrivals; ++a) {
    const ArrivalOutcome o = system.next_arrival();
    stats.record(o, system.now());
  }
  return stats.finish(system.now());
}

std::string to_string(EventKind kind) {
  switch (kind) {
    case EventKind::warmup_start: return "warmup_start";
    case EventKind::warmup_end: return "warmup_end";
    case EventKind::ring_order: return "ring_order";
    case EventKind::token_pass: return "token_pass";
    case EventKind::tune: return "tune";
    case EventKind::starvation: return "starvation";
    case EventKind::protocol_end: return "protocol_end";
    case EventKind::load_change: return "load_change";
    case EventKind::retune_trigger: return "retune_trigger";
    case EventKind::retune_failed: return "retune_failed";
    case EventKind::horizon_reached: return "horizon_reached";
  }
  return "unknown";
}

std::string to_string(Termination cause) {
  switch (cause) {
    case Termination::ratio_converged: return "ratio_converged";
    case Termination::interval_collapsed: return "interval_collapsed";
    case Termination::starved: return "starved";
  }
  return "unknown";
}

std::size_t ProtocolTrace::count(EventKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(events.begin(), events.end(), [kind](const TraceEvent& e) { return e.kind == kind; }));
}

std::vector<TuneAction> ProtocolTrace::tune_actions() const {
  std::vector<TuneAction> actions;
  for (const TraceEvent& e : events) {
    if (e.kind == EventKind::tune && e.tune) actions.push_back(*e.tune);
  }
  return actions;
}

// ---------------------------------------------------------------------------

class ProtocolSession::Impl {
 public:
  explicit Impl(SimConfig config)
      : cfg_(std::move(config)),
        system_(cfg_.loads, cfg_.coop, cfg_.seed),
        stats_(cfg_.loads.size(), cfg_.max_arrivals / cfg_.batches),
        in_(cfg_.loads.size(), 0),
        out_(cfg_.loads.size(), 0),
        budget_(cfg_.max_arrivals) {
    warmup_ = cfg_.warmup_duration > 0.0 ? cfg_.warmup_duration : default_warmup_duration(cfg_.loads, cfg_.k);
    timeout_ = cfg_.token_timeout > 0.0 ? cfg_.token_timeout : warmup_;
  }

  void run() {
    completed_ = warmup_phase() && tuning_laps(cfg_.rounds, nullptr);
    finish_phase();
  }

  void change_loads(const LoadVector& loads, std::uint64_t extra_arrivals) {
    if (loads.size() != system_.nodes()) throw InvalidInput("new loads must keep the node count");
    system_.set_loads(loads);
    budget_ += extra_arrivals;
    TraceEvent e = event(EventKind::load_change);
    e.loads.assign(loads.values().begin(), loads.values().end());
    e.coop = system_.coop();
    trace_.events.push_back(std::move(e));
    monitor();
  }

  ProtocolResult result() const {
    ProtocolResult r;
    r.report = stats_.finish(system_.now());
    r.trace = trace_;
    r.coop = CoopVector(system_.coop());
    r.completed = completed_;
    r.starvations = starvations_;
    return r;
  }

 private:
  TraceEvent event(EventKind kind, std::optional<std::size_t> node = std::nullopt) const {
    TraceEvent e;
    e.time = system_.now();
    e.kind = kind;
    e.node = node;
    e.lap = lap_;
    return e;
  }

  /// One arrival; false once the arrival budget is spent.
  bool step() {
    if (arrivals_ >= budget_) {
      if (!horizon_logged_) {
        trace_.events.push_back(event(EventKind::horizon_reached));
        horizon_logged_ = true;
      }
      return false;
    }
    last_ = system_.next_arrival();
    ++arrivals_;
    stats_.record(last_, system_.now());
    if (last_.placement == Placement::remote) {
      ++in_[last_.executor];
      ++out_[last_.origin];
    }
    return true;
  }

  void reset_counters() {
    std::fill(in_.begin(), in_.end(), 0);
    std::fill(out_.begin(), out_.end(), 0);
  }

  bool warmup_phase() {
    lap_ = 0;
    for (std::size_t i = 0; i < system_.nodes(); ++i) system_.set_coop(i, 1.0);
    reset_counters();
    trace_.events.push_back(event(EventKind::warmup_start));
    const double end = system_.now() + warmup_;
    while (system_.now() < end) {
      if (!step()) return false;
    }

    const std::size_t n = system_.nodes();
    std::vector<double> r(n);
    for (std::size_t j = 0; j < n; ++j) r[j] = ratio_of(in_[j], out_[j]);
    TraceEvent done = event(EventKind::warmup_end);
    done.ratios = r;
    trace_.events.push_back(std::move(done));

    // lowest ratio keeps p = 1; ties go to the lowest index
    anchor_ = static_cast<std::size_t>(std::distance(r.begin(), std::min_element(r.begin(), r.end())));
    ring_.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != anchor_) ring_.push_back(j);
    }
    std::stable_sort(ring_.begin(), ring_.end(), [&](std::size_t a, std::size_t b) { return r[a] > r[b]; });
    TraceEvent order = event(EventKind::ring_order, anchor_);
    order.ring = ring_;
    trace_.events.push_back(std::move(order));
    return true;
  }

  /// Runs `laps` token laps over the ring. When `saturated` is given it is set
  /// if some holder wanted p above its bracket while already near 1.
  bool tuning_laps(std::size_t laps, bool* saturated) {
    for (std::size_t l = 1; l <= laps; ++l) {
      lap_ = l;
      for (std::size_t pos = 0; pos < ring_.size(); ++pos) {
        if (!visit(ring_[pos], saturated)) return false;
      }
    }
    return true;
  }

  bool visit(std::size_t j, bool* saturated) {
    double lo = 0.0;
    double hi = 1.0;
    in_[j] = 0;
    out_[j] = 0;
    double window_start = system_.now();
    for (;;) {
      if (!step()) return false;
      if (in_[j] < cfg_.k && out_[j] < cfg_.k) {
        if (system_.now() - window_start > timeout_) {
          ++starvations_;
          trace_.events.push_back(event(EventKind::starvation, j));
          pass_token(j, Termination::starved);
          return true;
        }
        continue;
      }

      TuneAction t;
      t.in = in_[j];
      t.out = out_[j];
      t.r = ratio_of(in_[j], out_[j]);
      t.p_old = system_.coop(j);
      in_[j] = 0;
      out_[j] = 0;
      window_start = system_.now();

      const bool wide = hi - lo > cfg_.eps;
      double new_lo = lo, new_hi = hi;
      if (t.r >= 1.0 + cfg_.eps) new_hi = t.p_old;
      if (t.r <= 1.0 - cfg_.eps) new_lo = t.p_old;
      const bool outside = t.r >= 1.0 + cfg_.eps || t.r <= 1.0 - cfg_.eps;
      if (outside && wide && new_lo < new_hi) {
        lo = new_lo;
        hi = new_hi;
        t.lo = lo;
        t.hi = hi;
        t.p_new = 0.5 * (lo + hi);
        system_.set_coop(j, t.p_new);
        TraceEvent e = event(EventKind::tune, j);
        e.tune = t;
        trace_.events.push_back(std::move(e));
        continue;
      }
      if (saturated && t.r <= 1.0 - cfg_.eps && t.p_old >= 1.0 - cfg_.eps) *saturated = true;
      pass_token(j, std::abs(t.r - 1.0) < cfg_.eps ? Termination::ratio_converged : Termination::interval_collapsed);
      return true;
    }
  }

  void pass_token(std::size_t j, Termination cause) {
    TraceEvent e = event(EventKind::token_pass, j);
    e.cause = cause;
    trace_.events.push_back(std::move(e));
  }

  void finish_phase() {
    TraceEvent e = event(EventKind::protocol_end);
    e.coop = system_.coop();
    trace_.events.push_back(std::move(e));
  }

  void monitor() {
    const std::size_t window = cfg_.k * cfg_.monitor_factor;
    reset_counters();
    while (step()) {
      if (last_.placement != Placement::remote) continue;
      for (std::size_t j : {last_.origin, last_.executor}) {
        if (in_[j] < window && out_[j] < window) continue;
        const double r = ratio_of(in_[j], out_[j]);
        const double se = std::isfinite(r) && in_[j] > 0
                              ? r * std::sqrt(1.0 / double(in_[j]) + 1.0 / double(out_[j]))
                              : 0.0;
        in_[j] = 0;
        out_[j] = 0;
        const double dev = std::abs(r - 1.0);
        if (dev > cfg_.eps && dev > cfg_.eps + cfg_.monitor_z * se) {
          retune(j);
          reset_counters();
          break;
        }
      }
    }
  }

  void retune(std::size_t trigger) {
    trace_.events.push_back(event(EventKind::retune_trigger, trigger));
    bool saturated = false;
    if (!tuning_laps(1, &saturated)) return;
    if (saturated) {
      trace_.events.push_back(event(EventKind::retune_failed, trigger));
      if (!(warmup_phase() && tuning_laps(cfg_.rounds, nullptr))) return;
    }
    finish_phase();
  }

  SimConfig cfg_;
  LossSystem system_;
  BatchStats stats_;
  ProtocolTrace trace_;
  std::vector<std::uint64_t> in_, out_;
  std::uint64_t budget_;
  std::uint64_t arrivals_ = 0;
  ArrivalOutcome last_{};
  double warmup_ = 0.0;
  double timeout_ = 0.0;
  std::vector<std::size_t> ring_;
  std::size_t anchor_ = 0;
  std::size_t lap_ = 0;
  std::size_t starvations_ = 0;
  bool completed_ = false;
  bool horizon_logged_ = false;
};

ProtocolSession::ProtocolSession(SimConfig config) {
  validate(config);
  impl_ = std::make_unique<Impl>(std::move(config));
}
ProtocolSession::~ProtocolSession() = default;
ProtocolSession::ProtocolSession(ProtocolSession&&) noexcept = default;
ProtocolSession& ProtocolSession::operator=(ProtocolSession&&) noexcept = default;

void ProtocolSession::run() { impl_->run(); }

void ProtocolSession::change_loads(const LoadVector& loads, std::uint64_t extra_arrivals) {
  impl_->change_loads(loads, extra_arrivals);
}

ProtocolResult ProtocolSession::result() const { return impl_->result(); }

ProtocolResult run_protocol(const SimConfig& config) {
  ProtocolSession session(config);
  session.run();
  return session.result();
}

ProtocolResult trigger_retune(ProtocolSession& session, const LoadVector& new_loads, std::uint64_t extra_arrivals) {
  session.change_loads(new_loads, extra_arrivals);
  return session.result();
}

}  // namespace f2f
