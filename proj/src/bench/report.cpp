// Copyright 2026 The StreamKV Authors
// SPDX-License-Identifier: Apache-2.0

#include "streamkv/bench/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "streamkv/common/error.hpp"

namespace streamkv::bench {

Summary summarize(const std::vector<double>& v) {
  Summary s;
  s.count = v.size();
  if (v.empty()) return s;
  s.avg = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double sq = 0;
  for (const double x : v) sq += (x - s.avg) * (x - s.avg);
  s.stddev = std::sqrt(sq / static_cast<double>(v.size()));
  s.min = *std::min_element(v.begin(), v.end());
  s.max = *std::max_element(v.begin(), v.end());
  return s;
}

Summary LatencyReport::wall_summary() const {
  std::vector<double> w;
  for (const auto& r : rows) w.push_back(r.wall_ms);
  return summarize(w);
}

namespace {

const char* const kHeader =
    "iteration,mode,query_id,path,wall_ms,session_tokens,pool_tokens,stream_tokens,flash_tokens,context_tokens,"
    "query_tokens,generated,answer";

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);  // shortest round-trip form
  return std::string(buf, res.ptr);
}

// Splits one CSV record starting at pos; advances pos past the line end.
std::vector<std::string> split_record(const std::string& text, std::size_t& pos) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  while (pos < text.size()) {
    const char c = text[pos++];
    if (quoted) {
      if (c == '"') {
        if (pos < text.size() && text[pos] == '"') {
          cur += '"';
          ++pos;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

template <typename T>
T parse_num(const std::string& s) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kInvalidArgument, "bad numeric CSV field: " + s);
  }
  return v;
}

}  // namespace

std::string to_csv(const LatencyReport& report) {
  std::ostringstream out;
  out << kHeader << "\n";
  for (const auto& r : report.rows) {
    out << r.iteration << ',' << quote(r.mode) << ',' << quote(r.query_id) << ',' << quote(r.path) << ','
        << fmt_double(r.wall_ms) << ',' << r.session_tokens << ',' << r.pool_tokens << ',' << r.stream_tokens << ','
        << r.flash_tokens << ',' << r.context_tokens << ',' << r.query_tokens << ',' << r.generated << ','
        << quote(r.answer) << "\n";
  }
  if (!report.valid || !report.note.empty()) {
    std::string note = report.note;
    std::replace(note.begin(), note.end(), '\n', ' ');
    out << "# valid=" << (report.valid ? 1 : 0) << " " << note << "\n";
  }
  return out.str();
}

LatencyReport parse_csv(const std::string& text) {
  LatencyReport rep;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    if (text[pos] == '#') {
      const std::size_t end = text.find('\n', pos);
      const std::string line = text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
      pos = end == std::string::npos ? text.size() : end + 1;
      if (line.rfind("# valid=", 0) == 0) {
        rep.valid = line.size() > 8 && line[8] == '1';
        rep.note = line.size() > 10 ? line.substr(10) : "";
      }
      continue;
    }
    auto f = split_record(text, pos);
    if (header) {
      header = false;
      continue;
    }
    if (f.size() == 1 && f[0].empty()) continue;
    if (f.size() != 13) throw Error(ErrorCode::kInvalidArgument, "CSV row has wrong field count");
    IterationRow r;
    r.iteration = parse_num<int>(f[0]);
    r.mode = f[1];
    r.query_id = f[2];
    r.path = f[3];
    r.wall_ms = parse_num<double>(f[4]);
    r.session_tokens = parse_num<std::uint64_t>(f[5]);
    r.pool_tokens = parse_num<std::uint64_t>(f[6]);
    r.stream_tokens = parse_num<std::uint64_t>(f[7]);
    r.flash_tokens = parse_num<std::uint64_t>(f[8]);
    r.context_tokens = parse_num<std::uint64_t>(f[9]);
    r.query_tokens = parse_num<std::uint64_t>(f[10]);
    r.generated = parse_num<std::uint64_t>(f[11]);
    r.answer = f[12];
    rep.rows.push_back(std::move(r));
  }
  return rep;
}

std::string format_summary(const LatencyReport& report) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%4s %-14s %-4s %-10s %10s %8s %8s %8s %8s %9s\n", "iter", "mode", "q", "path",
                "wall_ms", "session", "pool", "stream", "flash", "context");
  out << line;
  for (const auto& r : report.rows) {
    std::snprintf(line, sizeof line, "%4d %-14s %-4s %-10s %10.3f %8llu %8llu %8llu %8llu %9llu\n", r.iteration,
                  r.mode.c_str(), r.query_id.c_str(), r.path.c_str(), r.wall_ms,
                  static_cast<unsigned long long>(r.session_tokens), static_cast<unsigned long long>(r.pool_tokens),
                  static_cast<unsigned long long>(r.stream_tokens), static_cast<unsigned long long>(r.flash_tokens),
                  static_cast<unsigned long long>(r.context_tokens));
    out << line;
  }
  const Summary s = report.wall_summary();
  std::snprintf(line, sizeof line, "\nqueries %zu  avg %.3f ms  std %.3f ms  min %.3f ms  max %.3f ms\n", s.count,
                s.avg, s.stddev, s.min, s.max);
  out << line;
  if (!report.valid) out << "run aborted: " << report.note << "\n";
  return out.str();
}

}  // namespace streamkv::bench
