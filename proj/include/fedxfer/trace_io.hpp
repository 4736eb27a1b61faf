#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedxfer/losses.hpp"

namespace fedxfer {

/// Shortest base-10 form that round-trips the exact double (std::to_chars).
std::string format_double(double v);

struct TraceRow {
  std::uint32_t run = 0;
  std::uint32_t iteration = 0;
  LossBreakdown losses;
};

/// CSV with header run,iteration,j_b,j_ab,j_a_reg,j_b_reg,total. The same
/// shape carries autoencoder traces, with the reconstruction error in `total`
/// and zeros elsewhere.
void write_trace_csv(const std::string& path, const std::vector<TraceRow>& rows);

std::vector<TraceRow> ftl_trace_rows(std::uint32_t run, const std::vector<LossBreakdown>& trace);
std::vector<TraceRow> ae_trace_rows(std::uint32_t run, const std::vector<double>& trace);

/// CSV with header index,score,label.
void write_scores_csv(const std::string& path, const std::vector<double>& scores,
                      const std::vector<std::int8_t>& labels);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace fedxfer
