#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "zoba/solver.hpp"

namespace zoba::harness {

// Fixed column order of trace files.
inline constexpr std::string_view kTraceHeader =
    "k,evals,wall_ns,psi,psi_gap,norm_gap,grad_psi_norm,z_err,v_err,diverged";

// Shortest round-trippable form with at most 17 significant digits; "nan", "inf", "-inf".
std::string format_double(double value);

std::string format_trace_csv(const std::vector<TraceRow>& rows);
// `source` names the input in error messages.
std::vector<TraceRow> parse_trace_csv(std::string_view text, const std::string& source = "<csv>");

// Throws std::runtime_error with the path on I/O failure.
void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& rows);
std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path);

}  // namespace zoba::harness
