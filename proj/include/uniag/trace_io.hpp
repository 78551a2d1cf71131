#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "uniag/algorithms.hpp"

namespace uniag {

inline constexpr const char* kTraceCsvHeader =
    "k,alpha,beta,lambda,gamma,m_k,psi_md,psi_ag,phi_ag,grad_norm_md,gradmap_norm";

// 17 significant digits: enough for exact double round-trips.
inline std::string format_double17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline void append_field(std::string& row, const std::optional<double>& v) {
  row.push_back(',');
  if (v) row += format_double17(*v);
}

}  // namespace detail

inline std::string trace_rows_csv(const std::vector<IterationRecord>& records) {
  std::string out = kTraceCsvHeader;
  out.push_back('\n');
  for (const auto& r : records) {
    std::string row = std::to_string(r.k);
    detail::append_field(row, r.alpha);
    detail::append_field(row, r.beta);
    detail::append_field(row, r.lambda);
    detail::append_field(row, r.gamma);
    row.push_back(',');
    if (r.batch) row += std::to_string(*r.batch);
    detail::append_field(row, r.psi_md);
    detail::append_field(row, r.psi_ag);
    detail::append_field(row, r.phi_ag);
    detail::append_field(row, r.grad_norm_md);
    detail::append_field(row, r.gradmap_norm);
    out += row;
    out.push_back('\n');
  }
  return out;
}

inline void emit_trace_csv(const RunTrace& trace, std::ostream& os) {
  os << trace_rows_csv(trace.records);
}

// Parses a trace CSV back into per-iteration records (iterate vectors are
// not part of the file format). Re-emitting the result reproduces the
// input bytes.
inline std::vector<IterationRecord> parse_trace_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kTraceCsvHeader)
    throw std::invalid_argument("parse_trace_csv: bad header");
  std::vector<IterationRecord> records;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
      if (ch == ',') {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(ch);
      }
    }
    fields.push_back(cur);
    if (fields.size() != 11)
      throw std::invalid_argument("parse_trace_csv: row with " +
                                  std::to_string(fields.size()) + " fields");
    auto opt = [](const std::string& s) -> std::optional<double> {
      if (s.empty()) return std::nullopt;
      size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument("parse_trace_csv: bad number");
      return v;
    };
    auto num = [&](const std::string& s) {
      auto v = opt(s);
      if (!v) throw std::invalid_argument("parse_trace_csv: missing required field");
      return *v;
    };
    IterationRecord r;
    r.k = std::stoi(fields[0]);
    r.alpha = num(fields[1]);
    r.beta = num(fields[2]);
    r.lambda = num(fields[3]);
    r.gamma = opt(fields[4]);
    if (!fields[5].empty()) r.batch = std::stoll(fields[5]);
    r.psi_md = opt(fields[6]);
    r.psi_ag = opt(fields[7]);
    r.phi_ag = opt(fields[8]);
    r.grad_norm_md = opt(fields[9]);
    r.gradmap_norm = opt(fields[10]);
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace uniag
