// popsim: single runs, experiment sweeps, figure reproduction and analytic
// oracles for the bundled population protocols.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 non-convergence
// (a run that hit its step budget).

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "popsim/analytic.hpp"
#include "popsim/csv.hpp"
#include "popsim/experiment.hpp"

using namespace popsim;

namespace {

std::vector<std::size_t> power_grid(std::size_t n_min, std::size_t n_max) {
  const auto is_pow2 = [](std::size_t v) { return v >= 2 && (v & (v - 1)) == 0; };
  if (!is_pow2(n_min) || !is_pow2(n_max) || n_min > n_max) {
    throw CLI::ValidationError(
        "--n-min/--n-max must be powers of two with n-min <= n-max");
  }
  std::vector<std::size_t> grid;
  for (std::size_t n = n_min; n <= n_max; n *= 2) {
    grid.push_back(n);
  }
  return grid;
}

std::vector<Metric> summary_metrics(ProtocolKind protocol) {
  switch (protocol) {
    case ProtocolKind::epidemic:
      return {Metric::parallel_time, Metric::steps};
    case ProtocolKind::elimination:
      return {Metric::parallel_time, Metric::steps, Metric::leaders_final};
    case ProtocolKind::pse:
      return {Metric::parallel_time, Metric::steps,      Metric::estimate,
              Metric::log2_estimate, Metric::cq_half,    Metric::ca_half,
              Metric::cq_final};
    case ProtocolKind::le:
      return {Metric::parallel_time, Metric::steps, Metric::leaders_final,
              Metric::leaders_at_deadline, Metric::unique_leader_at_deadline};
  }
  return {};
}

void write_outputs(const ExperimentConfig& cfg, unsigned jobs,
                   const std::string& out_dir,
                   const std::vector<Metric>& metrics) {
  std::filesystem::create_directories(out_dir);
  const auto records = run_replicates(cfg, jobs);
  std::vector<SummaryRow> rows;
  for (const Metric m : metrics) {
    for (auto& row : summarize(records, m)) {
      rows.push_back(std::move(row));
    }
  }
  const auto runs_path = (std::filesystem::path(out_dir) / "runs.csv").string();
  const auto summary_path =
      (std::filesystem::path(out_dir) / "summary.csv").string();
  emit_runs_csv(records, runs_path);
  emit_summary_csv(rows, summary_path);
  std::printf("wrote %s (%zu rows) and %s (%zu rows)\n", runs_path.c_str(),
              records.size(), summary_path.c_str(), rows.size());
}

struct RunOptions {
  std::string protocol;
  std::size_t n = 2;
  std::uint64_t seed = 1;
  std::int32_t m = 10;
  double b = 2.0;
  double deadline_coeff = 1.0;
  bool cap_reentry = false;
  std::uint64_t max_steps = 0;
  std::size_t repeat_median = 1;
};

int cmd_run(const RunOptions& opt) {
  ExperimentConfig cfg;
  cfg.protocol = parse_protocol(opt.protocol);
  cfg.n_values = {opt.n};
  cfg.reps = 1;
  cfg.base_seed = opt.seed;
  cfg.m = opt.m;
  cfg.b = opt.b;
  cfg.deadline_coefficient = opt.deadline_coeff;
  cfg.cap_reentry = opt.cap_reentry;
  cfg.max_steps = opt.max_steps;
  validate(cfg);

  if (opt.repeat_median > 1) {
    if (cfg.protocol != ProtocolKind::pse) {
      std::fprintf(stderr, "--repeat-median applies to --protocol pse only\n");
      return 1;
    }
    try {
      const auto median = repeat_median_estimate(opt.n, opt.repeat_median, opt.seed);
      std::printf("repeat_median k=%zu estimate=%lld\n", opt.repeat_median,
                  static_cast<long long>(median));
      return 0;
    } catch (const std::runtime_error& e) {
      std::fprintf(stderr, "%s\n", e.what());
      return 2;
    }
  }

  const RunRecord rec = run_single(cfg, opt.n, opt.seed);
  std::printf("protocol:      %s\n", to_string(rec.protocol));
  std::printf("n:             %zu\n", rec.n);
  std::printf("seed:          %llu\n", static_cast<unsigned long long>(rec.seed));
  std::printf("steps:         %llu\n", static_cast<unsigned long long>(rec.steps));
  std::printf("parallel_time: %s\n", format_double(rec.parallel_time).c_str());
  std::printf("stop_reason:   %s\n", to_string(rec.stop_reason));
  if (cfg.protocol == ProtocolKind::le) {
    std::printf("T:             %d\n", le_counter_threshold(opt.n, opt.b));
    std::printf("R:             %d\n", le_round_cap(opt.n, opt.b, opt.m));
  }
  if (rec.leaders_final) {
    std::printf("leaders_final: %lld\n", static_cast<long long>(*rec.leaders_final));
  }
  if (rec.leaders_at_deadline) {
    std::printf("leaders_at_deadline: %lld\n",
                static_cast<long long>(*rec.leaders_at_deadline));
  }
  if (rec.cq_half) {
    std::printf("cq_half:       %lld\n", static_cast<long long>(*rec.cq_half));
    std::printf("ca_half:       %lld\n", static_cast<long long>(*rec.ca_half));
  }
  if (rec.cq_final) {
    std::printf("cq_final:      %lld\n", static_cast<long long>(*rec.cq_final));
  }
  if (rec.estimate) {
    std::printf("estimate=2^(c_q+1)=%lld\n", static_cast<long long>(*rec.estimate));
  }
  return rec.stop_reason == StopReason::max_steps ? 2 : 0;
}

struct SweepOptions {
  std::string protocol;
  std::vector<std::size_t> n_list;
  std::size_t n_min = 8;
  std::size_t n_max = 4096;
  std::size_t reps = 100;
  std::uint64_t seed = 1;
  std::int32_t m = 10;
  double b = 2.0;
  std::string deadline_mode = "silence";
  double deadline_coeff = 1.0;
  bool cap_reentry = false;
  unsigned jobs = 1;
  std::string out = ".";
};

int cmd_sweep(const SweepOptions& opt) {
  ExperimentConfig cfg;
  cfg.protocol = parse_protocol(opt.protocol);
  cfg.n_values = opt.n_list.empty() ? power_grid(opt.n_min, opt.n_max) : opt.n_list;
  cfg.reps = opt.reps;
  cfg.base_seed = opt.seed;
  cfg.m = opt.m;
  cfg.b = opt.b;
  cfg.deadline_mode = opt.deadline_mode == "fixed" ? DeadlineMode::fixed_parallel_time
                                                   : DeadlineMode::silence;
  cfg.deadline_coefficient = opt.deadline_coeff;
  cfg.cap_reentry = opt.cap_reentry;
  validate(cfg);
  write_outputs(cfg, opt.jobs, opt.out, summary_metrics(cfg.protocol));
  return 0;
}

struct FigureOptions {
  std::string name;
  std::size_t n_min = 8;
  std::size_t n_max = 4096;
  std::size_t reps = 100;
  std::uint64_t seed = 1;
  std::int32_t m = 10;
  double b = 2.0;
  double deadline_coeff = 1.0;
  bool cap_reentry = false;
  unsigned jobs = 1;
  std::string out = ".";
};

int cmd_figure(const FigureOptions& opt) {
  ExperimentConfig cfg;
  cfg.n_values = power_grid(opt.n_min, opt.n_max);
  cfg.reps = opt.reps;
  cfg.base_seed = opt.seed;
  cfg.m = opt.m;
  cfg.b = opt.b;
  cfg.deadline_coefficient = opt.deadline_coeff;
  cfg.cap_reentry = opt.cap_reentry;

  std::vector<Metric> metrics;
  if (opt.name == "fig1a") {
    cfg.protocol = ProtocolKind::le;
    metrics = {Metric::parallel_time};
  } else if (opt.name == "fig1b") {
    cfg.protocol = ProtocolKind::le;
    metrics = {Metric::leaders_at_deadline, Metric::unique_leader_at_deadline};
  } else if (opt.name == "fig2a") {
    cfg.protocol = ProtocolKind::pse;
    metrics = {Metric::parallel_time};
  } else if (opt.name == "fig2b") {
    cfg.protocol = ProtocolKind::pse;
    metrics = {Metric::estimate, Metric::log2_estimate};
  } else if (opt.name == "fig3") {
    cfg.protocol = ProtocolKind::pse;
    metrics = {Metric::cq_half, Metric::ca_half};
  } else {
    std::fprintf(stderr, "unknown figure: %s\n", opt.name.c_str());
    return 1;
  }
  validate(cfg);
  write_outputs(cfg, opt.jobs, opt.out, metrics);
  return 0;
}

struct OracleOptions {
  std::string name;
  std::size_t n = 0;
  std::int32_t m = 10;
  double b = 2.0;
};

int cmd_oracle(const OracleOptions& opt) {
  if (opt.name == "epidemic_time") {
    std::printf("expected_interactions: %s\n",
                format_double(expected_epidemic_interactions(opt.n)).c_str());
    std::printf("expected_parallel_time: %s\n",
                format_double(expected_epidemic_parallel_time(opt.n)).c_str());
    return 0;
  }
  if (opt.name == "pse_counters") {
    const auto [cq, ca] = expected_pse_counters_at_half(opt.n);
    std::printf("expected_cq_half: %s\n", format_double(cq).c_str());
    std::printf("expected_ca_half: %s\n", format_double(ca).c_str());
    return 0;
  }
  if (opt.name == "le_round_cap") {
    std::printf("T: %d\n", le_counter_threshold(opt.n, opt.b));
    std::printf("R: %d\n", le_round_cap(opt.n, opt.b, opt.m));
    return 0;
  }
  std::fprintf(stderr, "unknown oracle: %s\n", opt.name.c_str());
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"population-protocol simulation engine and experiment harness"};
  // config keys live in a section per subcommand, e.g. [sweep] reps=200;
  // command-line flags take precedence over config values
  app.set_config("--config", "",
                 "read options from a config file (flags take precedence)");
  app.require_subcommand(1);

  RunOptions run_opt;
  auto* run_cmd = app.add_subcommand("run", "execute one replicate and report it");
  run_cmd->add_option("--protocol", run_opt.protocol, "epidemic|elimination|pse|le")
      ->required()
      ->check(CLI::IsMember({"epidemic", "elimination", "pse", "le"}));
  run_cmd->add_option("--n", run_opt.n, "population size (>= 2)")
      ->required()
      ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 30));
  run_cmd->add_option("--seed", run_opt.seed, "run seed")->capture_default_str();
  run_cmd->add_option("--m", run_opt.m, "largest random number (le)")
      ->capture_default_str();
  run_cmd->add_option("--b", run_opt.b, "estimation exponent (le)")
      ->capture_default_str();
  run_cmd->add_option("--deadline-coeff", run_opt.deadline_coeff,
                      "deadline coefficient for the leaders-at-deadline readout")
      ->capture_default_str();
  run_cmd->add_flag("--cap-reentry", run_opt.cap_reentry,
                    "allow round increments past the cap after leader meetings");
  run_cmd->add_option("--max-steps", run_opt.max_steps,
                      "step budget (0 = 200 n ceil(log2 n)^2)")
      ->capture_default_str();
  run_cmd->add_option("--repeat-median", run_opt.repeat_median,
                      "run k independent estimates and report the median (pse)")
      ->capture_default_str();

  SweepOptions sweep_opt;
  auto* sweep_cmd =
      app.add_subcommand("sweep", "run replicates over an n grid, write CSVs");
  sweep_cmd->add_option("--protocol", sweep_opt.protocol, "epidemic|elimination|pse|le")
      ->required()
      ->check(CLI::IsMember({"epidemic", "elimination", "pse", "le"}));
  sweep_cmd->add_option("--n", sweep_opt.n_list,
                        "explicit population sizes (overrides --n-min/--n-max)");
  sweep_cmd->add_option("--n-min", sweep_opt.n_min, "grid start (power of two)")
      ->capture_default_str();
  sweep_cmd->add_option("--n-max", sweep_opt.n_max, "grid end (power of two)")
      ->capture_default_str();
  sweep_cmd->add_option("--reps", sweep_opt.reps, "replicates per n")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sweep_cmd->add_option("--seed", sweep_opt.seed, "base seed")->capture_default_str();
  sweep_cmd->add_option("--m", sweep_opt.m, "largest random number (le)")
      ->capture_default_str();
  sweep_cmd->add_option("--b", sweep_opt.b, "estimation exponent (le)")
      ->capture_default_str();
  sweep_cmd
      ->add_option("--deadline-mode", sweep_opt.deadline_mode,
                   "silence: run to stabilization; fixed: stop at the deadline")
      ->check(CLI::IsMember({"silence", "fixed"}))
      ->capture_default_str();
  sweep_cmd->add_option("--deadline-coeff", sweep_opt.deadline_coeff,
                        "deadline coefficient (le)")
      ->capture_default_str();
  sweep_cmd->add_flag("--cap-reentry", sweep_opt.cap_reentry,
                      "allow round increments past the cap after leader meetings");
  sweep_cmd->add_option("--jobs", sweep_opt.jobs, "worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sweep_cmd->add_option("--out", sweep_opt.out, "output directory")
      ->capture_default_str();

  FigureOptions fig_opt;
  auto* fig_cmd = app.add_subcommand(
      "figure", "reproduce one of the bundled experiment figures as CSV");
  fig_cmd->add_option("name", fig_opt.name, "fig1a|fig1b|fig2a|fig2b|fig3")
      ->required()
      ->check(CLI::IsMember({"fig1a", "fig1b", "fig2a", "fig2b", "fig3"}));
  fig_cmd->add_option("--n-min", fig_opt.n_min, "grid start (power of two)")
      ->capture_default_str();
  fig_cmd->add_option("--n-max", fig_opt.n_max, "grid end (power of two)")
      ->capture_default_str();
  fig_cmd->add_option("--reps", fig_opt.reps, "replicates per n")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fig_cmd->add_option("--seed", fig_opt.seed, "base seed")->capture_default_str();
  fig_cmd->add_option("--m", fig_opt.m, "largest random number (le)")
      ->capture_default_str();
  fig_cmd->add_option("--b", fig_opt.b, "estimation exponent (le)")
      ->capture_default_str();
  fig_cmd->add_option("--deadline-coeff", fig_opt.deadline_coeff,
                      "deadline coefficient (le)")
      ->capture_default_str();
  fig_cmd->add_flag("--cap-reentry", fig_opt.cap_reentry,
                    "allow round increments past the cap after leader meetings");
  fig_cmd->add_option("--jobs", fig_opt.jobs, "worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fig_cmd->add_option("--out", fig_opt.out, "output directory")
      ->capture_default_str();

  OracleOptions oracle_opt;
  auto* oracle_cmd = app.add_subcommand(
      "oracle", "print closed-form expectations for comparison against sweeps");
  oracle_cmd
      ->add_option("name", oracle_opt.name, "epidemic_time|pse_counters|le_round_cap")
      ->required()
      ->check(CLI::IsMember({"epidemic_time", "pse_counters", "le_round_cap"}));
  oracle_cmd->add_option("--n", oracle_opt.n, "population size")
      ->required()
      ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 30));
  oracle_cmd->add_option("--m", oracle_opt.m, "largest random number")
      ->capture_default_str();
  oracle_cmd->add_option("--b", oracle_opt.b, "estimation exponent")
      ->capture_default_str();

  for (auto* cmd : {run_cmd, sweep_cmd, fig_cmd, oracle_cmd}) {
    cmd->fallthrough();  // lets --config appear after the subcommand name
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (run_cmd->parsed()) {
      return cmd_run(run_opt);
    }
    if (sweep_cmd->parsed()) {
      return cmd_sweep(sweep_opt);
    }
    if (fig_cmd->parsed()) {
      return cmd_figure(fig_opt);
    }
    if (oracle_cmd->parsed()) {
      return cmd_oracle(oracle_opt);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
