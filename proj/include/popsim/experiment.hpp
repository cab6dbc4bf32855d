#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "popsim/engine.hpp"
#include "popsim/protocols/elimination.hpp"
#include "popsim/protocols/epidemic.hpp"
#include "popsim/protocols/leader_election.hpp"
#include "popsim/protocols/pse.hpp"

namespace popsim {

enum class ProtocolKind { epidemic, elimination, pse, le };

inline const char* to_string(ProtocolKind k) {
  switch (k) {
    case ProtocolKind::epidemic:
      return "epidemic";
    case ProtocolKind::elimination:
      return "elimination";
    case ProtocolKind::pse:
      return "pse";
    case ProtocolKind::le:
      return "le";
  }
  return "unknown";
}

inline ProtocolKind parse_protocol(std::string_view s) {
  if (s == "epidemic") return ProtocolKind::epidemic;
  if (s == "elimination") return ProtocolKind::elimination;
  if (s == "pse") return ProtocolKind::pse;
  if (s == "le") return ProtocolKind::le;
  throw std::invalid_argument("unknown protocol: " + std::string(s));
}

enum class DeadlineMode { silence, fixed_parallel_time };

// One (protocol, n-grid, params) experiment cell. reps replicates are run
// per n with per-replicate seeds derived from base_seed, so identical
// configs always produce identical records.
struct ExperimentConfig {
  ProtocolKind protocol = ProtocolKind::epidemic;
  std::vector<std::size_t> n_values;
  std::size_t reps = 100;
  std::uint64_t base_seed = 1;
  std::int32_t m = 10;    // le only
  double b = 2.0;         // le only
  DeadlineMode deadline_mode = DeadlineMode::silence;
  double deadline_coefficient = 1.0;
  bool cap_reentry = false;
  std::uint64_t max_steps = 0;  // 0 -> default_max_steps(n)
};

// One replicate's outcome. Fields that a protocol does not produce stay
// empty (and are rendered as empty CSV cells).
struct RunRecord {
  ProtocolKind protocol = ProtocolKind::epidemic;
  std::size_t n = 0;
  std::size_t rep = 0;
  std::uint64_t seed = 0;
  std::uint64_t steps = 0;
  double parallel_time = 0.0;
  StopReason stop_reason = StopReason::max_steps;
  std::optional<std::int64_t> leaders_final;
  std::optional<std::int64_t> leaders_at_deadline;
  std::optional<std::int64_t> estimate;
  std::optional<std::int64_t> cq_half;
  std::optional<std::int64_t> ca_half;
  std::optional<std::int64_t> cq_final;

  bool operator==(const RunRecord&) const = default;
};

// Stable replicate seed: a splitmix64 chain over (base_seed, protocol, n,
// rep). Cells are reproducible independently and in any order.
inline std::uint64_t derive_seed(std::uint64_t base_seed, ProtocolKind protocol,
                                 std::size_t n, std::size_t rep) {
  std::uint64_t h = splitmix64(base_seed);
  h = splitmix64(h ^ (static_cast<std::uint64_t>(protocol) + 1));
  h = splitmix64(h ^ static_cast<std::uint64_t>(n));
  h = splitmix64(h ^ static_cast<std::uint64_t>(rep));
  return h;
}

// Deadline used for the leaders-at-deadline readout:
// coefficient * log2^2(n) / log2(log2 n) units of parallel time.
inline double le_deadline_parallel_time(std::size_t n, double coefficient) {
  if (n < 3) {
    throw std::invalid_argument("le_deadline_parallel_time: n must be >= 3");
  }
  const double lg = std::log2(static_cast<double>(n));
  return coefficient * lg * lg / std::log2(lg);
}

// Fires once, at the first step where the infected count reaches
// floor(n/2), and records the leader's (cq, ca). Does not fire if the
// leader halts first.
inline SnapshotHook<Pse> half_infection_hook(std::size_t n) {
  const auto threshold = static_cast<std::int64_t>(n / 2);
  return {"half_infection",
          [threshold](const Population<Pse>& pop)
              -> std::optional<std::vector<std::int64_t>> {
            if (pop.counts().a < threshold) {
              return std::nullopt;
            }
            for (const auto& s : pop.agents()) {
              if (s.kind == PseState::Kind::leader) {
                return std::vector<std::int64_t>{s.cq, s.ca};
              }
            }
            return std::nullopt;  // leader already halted
          }};
}

// Fires once the run reaches the deadline step and records the number of
// leaders (fresh agents count as leaders).
inline SnapshotHook<LeaderElection> le_deadline_hook(double deadline_pt,
                                                     std::size_t n) {
  const std::uint64_t deadline_steps = steps_for_parallel_time(deadline_pt, n);
  return {"leaders_at_deadline",
          [deadline_steps](const Population<LeaderElection>& pop)
              -> std::optional<std::vector<std::int64_t>> {
            if (pop.step_count() < deadline_steps) {
              return std::nullopt;
            }
            return std::vector<std::int64_t>{pop.counts().fresh +
                                             pop.counts().leaders};
          }};
}

namespace detail {

inline const Snapshot* find_snapshot(const std::vector<Snapshot>& snaps,
                                     std::string_view label) {
  for (const auto& s : snaps) {
    if (s.label == label) {
      return &s;
    }
  }
  return nullptr;
}

}  // namespace detail

// Executes one replicate with an explicit seed and returns its record
// (rep is carried through for bookkeeping only).
inline RunRecord run_single(const ExperimentConfig& cfg, std::size_t n,
                            std::uint64_t seed, std::size_t rep = 0) {
  Rng rng(seed);
  RunRecord rec;
  rec.protocol = cfg.protocol;
  rec.n = n;
  rec.rep = rep;
  rec.seed = seed;

  StopCondition stop;
  stop.max_steps = cfg.max_steps != 0 ? cfg.max_steps : default_max_steps(n);

  switch (cfg.protocol) {
    case ProtocolKind::epidemic: {
      const Epidemic proto;
      auto res = run(Population(proto, n), proto, rng, stop);
      rec.steps = res.steps;
      rec.parallel_time = res.parallel_time;
      rec.stop_reason = res.stop_reason;
      break;
    }
    case ProtocolKind::elimination: {
      const Elimination proto;
      auto res = run(Population(proto, n), proto, rng, stop);
      rec.steps = res.steps;
      rec.parallel_time = res.parallel_time;
      rec.stop_reason = res.stop_reason;
      rec.leaders_final = res.population.counts().leaders;
      break;
    }
    case ProtocolKind::pse: {
      const Pse proto;
      const std::vector<SnapshotHook<Pse>> hooks{half_infection_hook(n)};
      auto res = run(Population(proto, n), proto, rng, stop, hooks);
      rec.steps = res.steps;
      rec.parallel_time = res.parallel_time;
      rec.stop_reason = res.stop_reason;
      if (const auto* snap = detail::find_snapshot(res.snapshots, "half_infection")) {
        rec.cq_half = snap->values.at(0);
        rec.ca_half = snap->values.at(1);
      }
      if (res.stop_reason == StopReason::halted) {
        for (const auto& s : res.population.agents()) {
          if (s.kind == PseState::Kind::halt) {
            rec.cq_final = s.cq;
            rec.estimate = pse_estimate(s);
            break;
          }
        }
      }
      break;
    }
    case ProtocolKind::le: {
      const LeParams params{cfg.m, le_counter_threshold(n, cfg.b),
                            le_round_cap(n, cfg.b, cfg.m), cfg.cap_reentry};
      const LeaderElection proto(params);
      std::vector<SnapshotHook<LeaderElection>> hooks;
      if (n >= 3) {  // the deadline formula needs log2 log2 n > 0
        const double deadline = le_deadline_parallel_time(n, cfg.deadline_coefficient);
        if (cfg.deadline_mode == DeadlineMode::fixed_parallel_time) {
          stop.deadline_parallel_time = deadline;
          stop.stop_on_stabilized = false;
        } else {
          hooks.push_back(le_deadline_hook(deadline, n));
        }
      }
      auto res = run(Population(proto, n), proto, rng, stop, hooks);
      rec.steps = res.steps;
      rec.parallel_time = res.parallel_time;
      rec.stop_reason = res.stop_reason;
      rec.leaders_final = proto.leader_count(res.population.counts());
      if (const auto* snap =
              detail::find_snapshot(res.snapshots, "leaders_at_deadline")) {
        rec.leaders_at_deadline = snap->values.at(0);
      } else if (res.stop_reason == StopReason::stabilized ||
                 res.stop_reason == StopReason::deadline) {
        // Stabilized before the deadline: the configuration is silent, so
        // the leader count at the deadline equals the final one.
        rec.leaders_at_deadline = rec.leaders_final;
      }
      break;
    }
  }
  return rec;
}

inline void validate(const ExperimentConfig& cfg) {
  if (cfg.reps < 1) {
    throw std::invalid_argument("ExperimentConfig: reps must be >= 1");
  }
  if (cfg.n_values.empty()) {
    throw std::invalid_argument("ExperimentConfig: n_values must be nonempty");
  }
  for (const std::size_t n : cfg.n_values) {
    if (n < 2) {
      throw std::invalid_argument("ExperimentConfig: all n must be >= 2");
    }
  }
  if (cfg.protocol == ProtocolKind::le) {
    if (cfg.m < 2) {
      throw std::invalid_argument("ExperimentConfig: le requires m >= 2");
    }
    if (cfg.b < 1.0) {
      throw std::invalid_argument("ExperimentConfig: le requires b >= 1");
    }
  }
}

// Runs reps replicates for every n in the config and returns the records
// ordered by (n, rep). Replicates own their population and generator, so
// they may execute on any number of threads without changing the result.
inline std::vector<RunRecord> run_replicates(const ExperimentConfig& cfg,
                                             unsigned jobs = 1) {
  validate(cfg);
  struct Task {
    std::size_t n;
    std::size_t rep;
  };
  std::vector<std::size_t> ns = cfg.n_values;
  std::sort(ns.begin(), ns.end());  // records come back (n asc, rep asc)
  std::vector<Task> tasks;
  tasks.reserve(ns.size() * cfg.reps);
  for (const std::size_t n : ns) {
    for (std::size_t rep = 0; rep < cfg.reps; ++rep) {
      tasks.push_back({n, rep});
    }
  }

  std::vector<RunRecord> records(tasks.size());
  const auto run_task = [&](std::size_t i) {
    const auto [n, rep] = tasks[i];
    const std::uint64_t seed = derive_seed(cfg.base_seed, cfg.protocol, n, rep);
    records[i] = run_single(cfg, n, seed, rep);
  };

  if (jobs <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      run_task(i);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= tasks.size()) {
            return;
          }
          run_task(i);
        }
      });
    }
    for (auto& t : workers) {
      t.join();
    }
  }
  return records;
}

enum class Metric {
  steps,
  parallel_time,
  leaders_final,
  leaders_at_deadline,
  unique_leader_at_deadline,
  estimate,
  log2_estimate,
  cq_half,
  ca_half,
  cq_final,
};

inline const char* to_string(Metric m) {
  switch (m) {
    case Metric::steps:
      return "steps";
    case Metric::parallel_time:
      return "parallel_time";
    case Metric::leaders_final:
      return "leaders_final";
    case Metric::leaders_at_deadline:
      return "leaders_at_deadline";
    case Metric::unique_leader_at_deadline:
      return "unique_leader_at_deadline";
    case Metric::estimate:
      return "estimate";
    case Metric::log2_estimate:
      return "log2_estimate";
    case Metric::cq_half:
      return "cq_half";
    case Metric::ca_half:
      return "ca_half";
    case Metric::cq_final:
      return "cq_final";
  }
  return "unknown";
}

// The metric's value for one record, if the record carries it.
inline std::optional<double> metric_value(const RunRecord& r, Metric m) {
  const auto opt = [](const std::optional<std::int64_t>& v) -> std::optional<double> {
    if (!v) {
      return std::nullopt;
    }
    return static_cast<double>(*v);
  };
  switch (m) {
    case Metric::steps:
      return static_cast<double>(r.steps);
    case Metric::parallel_time:
      return r.parallel_time;
    case Metric::leaders_final:
      return opt(r.leaders_final);
    case Metric::leaders_at_deadline:
      return opt(r.leaders_at_deadline);
    case Metric::unique_leader_at_deadline:
      if (!r.leaders_at_deadline) {
        return std::nullopt;
      }
      return *r.leaders_at_deadline == 1 ? 1.0 : 0.0;
    case Metric::estimate:
      return opt(r.estimate);
    case Metric::log2_estimate:
      if (!r.estimate) {
        return std::nullopt;
      }
      return std::log2(static_cast<double>(*r.estimate));
    case Metric::cq_half:
      return opt(r.cq_half);
    case Metric::ca_half:
      return opt(r.ca_half);
    case Metric::cq_final:
      return opt(r.cq_final);
  }
  return std::nullopt;
}

// Aggregate statistics of one metric over the replicates of one n.
// count is the number of records that carry the metric. std is the sample
// (k-1) standard deviation, median the midpoint convention, p95 the
// nearest-rank 95th percentile.
struct SummaryRow {
  ProtocolKind protocol = ProtocolKind::epidemic;
  std::string metric;
  std::size_t n = 0;
  std::size_t count = 0;
  double mean = 0.0;
  double std_dev = 0.0;
  double min = 0.0;
  double median = 0.0;
  double p95 = 0.0;
  double max = 0.0;
};

inline std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records,
                                         Metric metric) {
  std::vector<SummaryRow> rows;
  if (records.empty()) {
    return rows;
  }
  std::vector<std::size_t> ns;
  for (const auto& r : records) {
    if (std::find(ns.begin(), ns.end(), r.n) == ns.end()) {
      ns.push_back(r.n);
    }
  }
  std::sort(ns.begin(), ns.end());

  for (const std::size_t n : ns) {
    std::vector<double> values;
    for (const auto& r : records) {
      if (r.n != n) {
        continue;
      }
      if (const auto v = metric_value(r, metric)) {
        values.push_back(*v);
      }
    }
    if (values.empty()) {
      continue;
    }
    std::sort(values.begin(), values.end());
    const std::size_t k = values.size();
    double sum = 0.0;
    for (const double v : values) {
      sum += v;
    }
    const double mean = sum / static_cast<double>(k);
    double sq = 0.0;
    for (const double v : values) {
      sq += (v - mean) * (v - mean);
    }
    const double std_dev = k > 1 ? std::sqrt(sq / static_cast<double>(k - 1)) : 0.0;
    const double median = k % 2 == 1
                              ? values[k / 2]
                              : 0.5 * (values[k / 2 - 1] + values[k / 2]);
    const std::size_t p95_rank = static_cast<std::size_t>(
        std::ceil(0.95 * static_cast<double>(k)));
    const double p95 = values[std::max<std::size_t>(p95_rank, 1) - 1];

    SummaryRow row;
    row.protocol = records.front().protocol;
    row.metric = to_string(metric);
    row.n = n;
    row.count = k;
    row.mean = mean;
    row.std_dev = std_dev;
    row.min = values.front();
    row.median = median;
    row.p95 = p95;
    row.max = values.back();
    rows.push_back(std::move(row));
  }
  return rows;
}

// Median size estimate over k independent size-estimation replicates.
// Replicates that fail to halt within the step budget are excluded; more
// than k/2 exclusions is an error.
inline std::int64_t repeat_median_estimate(std::size_t n, std::size_t k,
                                           std::uint64_t base_seed) {
  if (k < 1 || k % 2 == 0) {
    throw std::invalid_argument("repeat_median_estimate: k must be odd and >= 1");
  }
  ExperimentConfig cfg;
  cfg.protocol = ProtocolKind::pse;
  cfg.n_values = {n};
  cfg.reps = k;
  cfg.base_seed = base_seed;
  std::vector<std::int64_t> estimates;
  for (const auto& rec : run_replicates(cfg)) {
    if (rec.estimate) {
      estimates.push_back(*rec.estimate);
    }
  }
  if (estimates.size() <= k / 2) {
    throw std::runtime_error(
        "repeat_median_estimate: more than half of the replicates failed to halt");
  }
  std::sort(estimates.begin(), estimates.end());
  return estimates[(estimates.size() - 1) / 2];
}

}  // namespace popsim
