#include "fedxfer/trace_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "fedxfer/error.hpp"

namespace fedxfer {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::load, "cannot open '" + path + "' for writing");
  out << content;
  if (!out) fail(ErrorCode::load, "write to '" + path + "' failed");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::load, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& rows) {
  std::string out = "run,iteration,j_b,j_ab,j_a_reg,j_b_reg,total\n";
  for (const TraceRow& r : rows) {
    out += std::to_string(r.run);
    out += ',';
    out += std::to_string(r.iteration);
    out += ',';
    out += format_double(r.losses.j_b);
    out += ',';
    out += format_double(r.losses.j_ab);
    out += ',';
    out += format_double(r.losses.j_a_reg);
    out += ',';
    out += format_double(r.losses.j_b_reg);
    out += ',';
    out += format_double(r.losses.total);
    out += '\n';
  }
  write_text_file(path, out);
}

std::vector<TraceRow> ftl_trace_rows(std::uint32_t run, const std::vector<LossBreakdown>& trace) {
  std::vector<TraceRow> rows;
  rows.reserve(trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i)
    rows.push_back(TraceRow{run, static_cast<std::uint32_t>(i + 1), trace[i]});
  return rows;
}

std::vector<TraceRow> ae_trace_rows(std::uint32_t run, const std::vector<double>& trace) {
  std::vector<TraceRow> rows;
  rows.reserve(trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    LossBreakdown l;
    l.total = trace[i];
    rows.push_back(TraceRow{run, static_cast<std::uint32_t>(i), l});
  }
  return rows;
}

void write_scores_csv(const std::string& path, const std::vector<double>& scores,
                      const std::vector<std::int8_t>& labels) {
  if (!labels.empty() && labels.size() != scores.size())
    fail(ErrorCode::dimension_mismatch, "scores and labels disagree in length");
  std::string out = "index,score,label\n";
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out += std::to_string(i);
    out += ',';
    out += format_double(scores[i]);
    out += ',';
    out += labels.empty() ? std::string() : std::to_string(int(labels[i]));
    out += '\n';
  }
  write_text_file(path, out);
}

}  // namespace fedxfer
