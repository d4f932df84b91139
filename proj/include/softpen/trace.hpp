#ifndef SOFTPEN_TRACE_HPP
#define SOFTPEN_TRACE_HPP

#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "softpen/errors.hpp"

namespace softpen {

struct TraceRecord {
  long steps = 0;
  int stage = 0;
  double delta = 0.0;
  double objective = 0.0;
  std::optional<double> rel_error;
  std::optional<double> gap;
  double min_gap = 0.0;
  int m_hat = 0;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline constexpr const char *kTraceHeader =
    "steps,stage,delta,objective,rel_error,gap,min_gap,m_hat";

// RFC-4180-style CSV, LF endings, absent metrics as empty fields;
// byte-identical for identical inputs.
inline void write_trace_csv(const std::string &path,
                            const std::vector<TraceRecord> &records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_file_missing("cannot open trace file " + path);
  out << kTraceHeader << '\n';
  for (const TraceRecord &r : records) {
    out << r.steps << ',' << r.stage << ',' << detail::format_double(r.delta)
        << ',' << detail::format_double(r.objective) << ',';
    if (r.rel_error) out << detail::format_double(*r.rel_error);
    out << ',';
    if (r.gap) out << detail::format_double(*r.gap);
    out << ',' << detail::format_double(r.min_gap) << ',' << r.m_hat << '\n';
  }
}

}  // namespace softpen

#endif
