#include "zoba/harness/trace_csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace zoba::harness {

namespace {

constexpr std::size_t kColumns = 10;

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what) {
  throw std::runtime_error(source + ":" + std::to_string(line) + ": " + what);
}

template <typename T>
T parse_int(std::string_view field, const std::string& source, std::size_t line) {
  T out{};
  const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  if (ec != std::errc() || end != field.data() + field.size()) {
    fail(source, line, "bad integer '" + std::string(field) + "'");
  }
  return out;
}

double parse_double(std::string_view field, const std::string& source, std::size_t line) {
  if (field == "nan") return std::numeric_limits<double>::quiet_NaN();
  double out = 0.0;
  const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  if (ec != std::errc() || end != field.data() + field.size()) {
    fail(source, line, "bad number '" + std::string(field) + "'");
  }
  return out;
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  // Shortest representation that round-trips; never more than 17 significant digits.
  const auto result = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), result.ptr);
}

std::string format_trace_csv(const std::vector<TraceRow>& rows) {
  std::string out(kTraceHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += std::to_string(r.k);
    out += ',';
    out += std::to_string(r.evals);
    out += ',';
    out += std::to_string(r.wall_ns);
    for (const double v : {r.psi, r.psi_gap, r.norm_gap, r.grad_psi_norm, r.z_err, r.v_err}) {
      out += ',';
      out += format_double(v);
    }
    out += r.diverged ? ",1\n" : ",0\n";
  }
  return out;
}

std::vector<TraceRow> parse_trace_csv(std::string_view text, const std::string& source) {
  std::vector<TraceRow> rows;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kTraceHeader) fail(source, line_no, "unexpected header '" + std::string(line) + "'");
      header_seen = true;
      continue;
    }
    std::array<std::string_view, kColumns> f;
    std::size_t n = 0;
    while (true) {
      const auto comma = line.find(',');
      if (n == kColumns) fail(source, line_no, "too many columns");
      f[n++] = line.substr(0, comma);
      if (comma == std::string_view::npos) break;
      line = line.substr(comma + 1);
    }
    if (n != kColumns) {
      fail(source, line_no, "expected " + std::to_string(kColumns) + " columns, got " + std::to_string(n));
    }
    TraceRow r;
    r.k = parse_int<std::uint64_t>(f[0], source, line_no);
    r.evals = parse_int<std::uint64_t>(f[1], source, line_no);
    r.wall_ns = parse_int<std::int64_t>(f[2], source, line_no);
    r.psi = parse_double(f[3], source, line_no);
    r.psi_gap = parse_double(f[4], source, line_no);
    r.norm_gap = parse_double(f[5], source, line_no);
    r.grad_psi_norm = parse_double(f[6], source, line_no);
    r.z_err = parse_double(f[7], source, line_no);
    r.v_err = parse_double(f[8], source, line_no);
    if (f[9] != "0" && f[9] != "1") fail(source, line_no, "diverged must be 0 or 1");
    r.diverged = f[9] == "1";
    rows.push_back(r);
  }
  if (!header_seen) fail(source, line_no, "missing header");
  return rows;
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const auto text = format_trace_csv(rows);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_trace_csv(buf.str(), path.string());
}

}  // namespace zoba::harness
