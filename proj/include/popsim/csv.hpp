#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "popsim/experiment.hpp"

namespace popsim {

// Full-precision decimal rendering that round-trips a double exactly.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline std::string cell(const std::optional<std::int64_t>& v) {
  return v ? std::to_string(*v) : std::string();
}

inline std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path);
  }
  return out;
}

}  // namespace detail

inline constexpr const char* kRunsCsvHeader =
    "protocol,n,rep,seed,steps,parallel_time,stop_reason,leaders_final,"
    "leaders_at_deadline,estimate,cq_half,ca_half,cq_final";

inline constexpr const char* kSummaryCsvHeader =
    "protocol,metric,n,count,mean,std,min,median,p95,max";

// One row per record, in the order given (run_replicates emits n asc,
// rep asc). Absent metrics are empty cells.
inline void emit_runs_csv(const std::vector<RunRecord>& records,
                          const std::string& path) {
  auto out = detail::open_for_write(path);
  out << kRunsCsvHeader << "\n";
  for (const auto& r : records) {
    out << to_string(r.protocol) << ',' << r.n << ',' << r.rep << ',' << r.seed
        << ',' << r.steps << ',' << format_double(r.parallel_time) << ','
        << to_string(r.stop_reason) << ',' << detail::cell(r.leaders_final)
        << ',' << detail::cell(r.leaders_at_deadline) << ','
        << detail::cell(r.estimate) << ',' << detail::cell(r.cq_half) << ','
        << detail::cell(r.ca_half) << ',' << detail::cell(r.cq_final) << "\n";
  }
  if (!out) {
    throw std::runtime_error("write failed: " + path);
  }
}

inline void emit_summary_csv(const std::vector<SummaryRow>& rows,
                             const std::string& path) {
  auto out = detail::open_for_write(path);
  out << kSummaryCsvHeader << "\n";
  for (const auto& row : rows) {
    out << to_string(row.protocol) << ',' << row.metric << ',' << row.n << ','
        << row.count << ',' << format_double(row.mean) << ','
        << format_double(row.std_dev) << ',' << format_double(row.min) << ','
        << format_double(row.median) << ',' << format_double(row.p95) << ','
        << format_double(row.max) << "\n";
  }
  if (!out) {
    throw std::runtime_error("write failed: " + path);
  }
}

}  // namespace popsim
