#include "synbd/report.h"

#include <cstdio>
#include <fstream>

#include "synbd/error.h"

namespace synbd {

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

// RFC 4180 quoting; templates contain commas.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string md_cell(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out.empty() ? "-" : out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << content;
  if (!f) throw Error("failed writing " + path.string());
}

}  // namespace

std::string render_csv(const ExperimentReport& report) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& r : report.rows) {
    out += csv_field(r.condition) + ',' + csv_field(r.regime) + ',' + csv_field(r.victim) + ',' + num(r.rate) +
           ',' + csv_field(r.trigger) + ',' + opt(r.asr) + ',' + num(r.cacc) + ',' + opt(r.asr_delta) + ',' +
           opt(r.cacc_delta) + '\n';
  }
  return out;
}

std::string render_markdown(const ExperimentReport& report) {
  std::string out = "# " + report.title + "\n\n";
  out += std::string("Generated by ") + kToolVersion + ".\n\n";
  out += "| Condition | Regime | Victim | Rate | Template | ASR | CACC | ΔASR | ΔCACC |\n";
  out += "|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : report.rows) {
    out += "| " + md_cell(r.condition) + " | " + md_cell(r.regime) + " | " + md_cell(r.victim) + " | " +
           num(r.rate) + " | " + md_cell(r.trigger) + " | " + md_cell(opt(r.asr)) + " | " + num(r.cacc) +
           " | " + md_cell(opt(r.asr_delta)) + " | " + md_cell(opt(r.cacc_delta)) + " |\n";
  }
  if (!report.stats.empty()) {
    out += "\n## Statistics\n\n| Condition | Key | Value |\n|---|---|---|\n";
    for (const auto& s : report.stats) {
      out += "| " + md_cell(s.condition) + " | " + md_cell(s.key) + " | " + md_cell(s.value) + " |\n";
    }
  }
  if (!report.notes.empty()) {
    out += "\n## Notes\n\n";
    for (const auto& n : report.notes) out += "- " + n + "\n";
  }
  return out;
}

void emit_report(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
  write_file(dir / "results.csv", render_csv(report));
  write_file(dir / "results.md", render_markdown(report));
  std::string echo = report.config_echo.empty() ? "{}" : report.config_echo;
  write_file(dir / "config.echo.json", echo + "\n");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f\n", report.runtime_seconds);
  write_file(dir / "runtime.txt", buf);
}

}  // namespace synbd
