#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace synbd {

inline constexpr const char* kToolVersion = "synbd 0.1.0";

struct ReportRow {
  std::string condition;  // "benign", "syntactic", "badnet+onion", ...
  std::string regime;
  std::string victim;
  double rate = 0.0;
  std::string trigger;  // template or trigger description
  std::optional<double> asr;
  double cacc = 0.0;
  std::optional<double> asr_delta;
  std::optional<double> cacc_delta;
};

struct ReportStat {
  std::string condition;
  std::string key;
  std::string value;
};

struct ExperimentReport {
  std::string title;
  std::vector<ReportRow> rows;
  std::vector<ReportStat> stats;  // poisoning statistics, quality metrics
  std::vector<std::string> notes;
  std::string config_echo;        // JSON
  double runtime_seconds = 0.0;   // not part of the deterministic outputs
};

inline constexpr const char* kCsvHeader =
    "condition,regime,victim,rate,template,asr,cacc,asr_delta,cacc_delta";

std::string render_csv(const ExperimentReport& report);
std::string render_markdown(const ExperimentReport& report);

// Writes results.csv, results.md and config.echo.json (byte-deterministic
// given the report) plus runtime.txt. Throws Error on IO failure.
void emit_report(const ExperimentReport& report, const std::filesystem::path& dir);

}  // namespace synbd
