#pragma once

#include <cassert>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "popsim/rng.hpp"

namespace popsim {

// A protocol supplies the per-agent state type, the ordered-pair transition
// function, an incrementally maintained aggregate (Counts) and the stop
// predicates evaluated on it.
template <typename P>
concept Protocol = requires(const P p, typename P::Counts& c,
                            const typename P::State& s, Rng& rng) {
  { p.initial_state(std::size_t{}) } -> std::same_as<typename P::State>;
  { p.make_empty_counts() } -> std::same_as<typename P::Counts>;
  p.count_add(c, s);
  p.count_remove(c, s);
  {
    p.delta(s, s, rng)
  } -> std::same_as<std::pair<typename P::State, typename P::State>>;
  { p.halted(c) } -> std::same_as<bool>;
  { p.stabilized(c) } -> std::same_as<bool>;
};

// An ordered pair of distinct agent indices picked by the scheduler.
struct SchedulerDraw {
  std::size_t initiator;
  std::size_t responder;
};

// Uniform over all n(n-1) ordered pairs of distinct agents.
inline SchedulerDraw draw_pair(Rng& rng, std::size_t n) {
  assert(n >= 2);
  const auto initiator = static_cast<std::size_t>(rng.below(n));
  auto responder = static_cast<std::size_t>(rng.below(n - 1));
  if (responder >= initiator) {
    ++responder;
  }
  return {initiator, responder};
}

// Scheduler steps divided by population size.
inline double parallel_time(std::uint64_t steps, std::size_t n) {
  assert(n >= 1);
  return static_cast<double>(steps) / static_cast<double>(n);
}

// Default step budget 200 * n * ceil(log2 n)^2: a generous multiple of the
// slowest expected stabilization among the bundled protocols, so runaway
// configurations terminate instead of looping forever.
inline std::uint64_t default_max_steps(std::size_t n) {
  const double lg = std::ceil(std::log2(static_cast<double>(n)));
  return static_cast<std::uint64_t>(200.0 * static_cast<double>(n) * lg * lg);
}

enum class StopReason { stabilized, halted, deadline, max_steps };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::stabilized:
      return "stabilized";
    case StopReason::halted:
      return "halted";
    case StopReason::deadline:
      return "deadline";
    case StopReason::max_steps:
      return "max_steps";
  }
  return "unknown";
}

// When a run stops. max_steps is mandatory; the other conditions are
// optional. Checked between steps in the order halted, stabilized,
// deadline, max_steps; the first condition that holds names the stop.
struct StopCondition {
  std::uint64_t max_steps = 0;
  std::optional<double> deadline_parallel_time;
  bool stop_on_stabilized = true;
  bool stop_on_halted = true;
};

inline std::uint64_t steps_for_parallel_time(double t, std::size_t n) {
  return static_cast<std::uint64_t>(
      std::ceil(t * static_cast<double>(n)));
}

// The sole mutable simulation object: n agent states plus aggregates kept
// consistent with them. n is fixed for the lifetime of the population.
template <Protocol P>
class Population {
 public:
  using State = typename P::State;

  Population(const P& proto, std::size_t n) : counts_(proto.make_empty_counts()) {
    if (n < 2) {
      throw std::invalid_argument("population size must be at least 2, got " +
                                  std::to_string(n));
    }
    agents_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      agents_.push_back(proto.initial_state(i));
      proto.count_add(counts_, agents_.back());
    }
  }

  std::size_t size() const { return agents_.size(); }
  std::uint64_t step_count() const { return step_count_; }
  const std::vector<State>& agents() const { return agents_; }
  const typename P::Counts& counts() const { return counts_; }
  double parallel_time() const {
    return popsim::parallel_time(step_count_, agents_.size());
  }

  // One scheduler step: draw an ordered pair, apply the transition to
  // (initiator, responder), write both states back. Returns whether any
  // agent changed state. Ineffective steps still advance step_count.
  bool step(const P& proto, Rng& rng) {
    const SchedulerDraw d = draw_pair(rng, agents_.size());
    const State x = agents_[d.initiator];
    const State y = agents_[d.responder];
    auto [nx, ny] = proto.delta(x, y, rng);
    ++step_count_;
    const bool effective = !(nx == x && ny == y);
    if (effective) {
      proto.count_remove(counts_, x);
      proto.count_remove(counts_, y);
      proto.count_add(counts_, nx);
      proto.count_add(counts_, ny);
      agents_[d.initiator] = nx;
      agents_[d.responder] = ny;
    }
    return effective;
  }

 private:
  std::vector<State> agents_;
  typename P::Counts counts_;
  std::uint64_t step_count_ = 0;
};

// Recompute aggregates from scratch; used to validate the incremental ones.
template <Protocol P>
typename P::Counts recount(const P& proto, const Population<P>& pop) {
  auto counts = proto.make_empty_counts();
  for (const auto& s : pop.agents()) {
    proto.count_add(counts, s);
  }
  return counts;
}

struct Snapshot {
  std::string label;
  std::uint64_t step = 0;
  std::vector<std::int64_t> values;
};

// Probed after every step (and once on the initial configuration) until it
// returns a payload; then it has fired and is not probed again.
template <typename P>
struct SnapshotHook {
  std::string label;
  std::function<std::optional<std::vector<std::int64_t>>(const Population<P>&)>
      probe;
};

template <typename P>
struct RunResult {
  std::uint64_t steps = 0;
  double parallel_time = 0.0;
  StopReason stop_reason = StopReason::max_steps;
  Population<P> population;
  std::vector<Snapshot> snapshots;
};

// Repeatedly steps the population until a stop condition fires. Hitting
// max_steps is reported through stop_reason, not an exception.
template <Protocol P>
RunResult<P> run(Population<P> pop, const P& proto, Rng& rng,
                 const StopCondition& stop,
                 const std::vector<SnapshotHook<P>>& hooks = {}) {
  if (stop.max_steps == 0) {
    throw std::invalid_argument("StopCondition::max_steps must be positive");
  }
  std::optional<std::uint64_t> deadline_steps;
  if (stop.deadline_parallel_time) {
    deadline_steps =
        steps_for_parallel_time(*stop.deadline_parallel_time, pop.size());
  }

  std::vector<Snapshot> snapshots;
  std::vector<bool> fired(hooks.size(), false);
  const auto eval_hooks = [&] {
    for (std::size_t i = 0; i < hooks.size(); ++i) {
      if (fired[i]) {
        continue;
      }
      if (auto payload = hooks[i].probe(pop)) {
        snapshots.push_back({hooks[i].label, pop.step_count(), std::move(*payload)});
        fired[i] = true;
      }
    }
  };

  eval_hooks();
  StopReason reason = StopReason::max_steps;
  for (;;) {
    if (stop.stop_on_halted && proto.halted(pop.counts())) {
      reason = StopReason::halted;
      break;
    }
    if (stop.stop_on_stabilized && proto.stabilized(pop.counts())) {
      reason = StopReason::stabilized;
      break;
    }
    if (deadline_steps && pop.step_count() >= *deadline_steps) {
      reason = StopReason::deadline;
      break;
    }
    if (pop.step_count() >= stop.max_steps) {
      reason = StopReason::max_steps;
      break;
    }
    pop.step(proto, rng);
    eval_hooks();
  }

  const std::uint64_t steps = pop.step_count();
  const double pt = pop.parallel_time();
  return RunResult<P>{steps, pt, reason, std::move(pop), std::move(snapshots)};
}

}  // namespace popsim
