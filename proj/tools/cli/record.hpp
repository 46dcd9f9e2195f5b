#ifndef RLAB_CLI_RECORD_HPP
#define RLAB_CLI_RECORD_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace rlab::cli {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

/// One per-trial row; metrics keep insertion order so CSV columns are stable.
struct Row {
  std::int64_t trial = 0;
  std::vector<std::pair<std::string, double>> metrics;

  Row& add(std::string name, double value) {
    metrics.emplace_back(std::move(name), value);
    return *this;
  }
};

/// Result of a subcommand before it is persisted.
struct CommandOutput {
  json parameters = json::object();
  std::map<std::string, double> metrics;
  std::vector<Row> rows;
  /// Extra files written next to record.json: file name -> JSON content.
  std::vector<std::pair<std::string, json>> artifacts;
  std::vector<std::string> console;
};

struct RunRecord {
  std::string run_id;
  std::string command;
  json parameters;
  std::uint64_t master_seed = 0;
  std::map<std::string, double> metrics;
  std::vector<std::string> artifact_paths;
  std::string timestamp;
};

std::string sha256_hex(const std::string& text);

/// First 16 hex digits of SHA-256 over the canonical JSON of (command, parameters, seed).
std::string compute_run_id(const std::string& command, const json& parameters, std::uint64_t master_seed);

std::string iso8601_now();

json to_json(const RunRecord& r);

/// {"trial": int, "metrics": {name: real}}
std::string row_to_jsonl(const Row& row);

/// Header "trial,<metric names>", values printed with 17 significant digits.
std::string rows_to_csv(const std::vector<Row>& rows);

/// Parses rows_to_csv output back into rows.
std::vector<Row> rows_from_csv(const std::string& text);

/// Writes OUT/run_id/{record.json, rows.jsonl, export.csv, artifacts...}.
RunRecord persist(const std::filesystem::path& out_dir, const std::string& command, std::uint64_t master_seed,
                  const CommandOutput& output);

}  // namespace rlab::cli

#endif  // RLAB_CLI_RECORD_HPP
