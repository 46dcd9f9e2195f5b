#include "cli/record.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <openssl/evp.h>

namespace rlab::cli {

std::string sha256_hex(const std::string& text) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string compute_run_id(const std::string& command, const json& parameters, std::uint64_t master_seed) {
  const json canonical = {{"command", command}, {"parameters", parameters}, {"master_seed", master_seed}};
  return sha256_hex(canonical.dump()).substr(0, 16);
}

std::string iso8601_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json to_json(const RunRecord& r) {
  return json{{"run_id", r.run_id},
              {"command", r.command},
              {"parameters", r.parameters},
              {"master_seed", r.master_seed},
              {"metrics", r.metrics},
              {"artifact_paths", r.artifact_paths},
              {"timestamp", r.timestamp}};
}

std::string row_to_jsonl(const Row& row) {
  ordered_json metrics = ordered_json::object();
  for (const auto& [k, v] : row.metrics) metrics[k] = v;
  ordered_json j;
  j["trial"] = row.trial;
  j["metrics"] = std::move(metrics);
  return j.dump();
}

std::string rows_to_csv(const std::vector<Row>& rows) {
  std::string out = "trial";
  if (!rows.empty())
    for (const auto& [k, v] : rows.front().metrics) out += "," + k;
  out += "\n";
  for (const auto& row : rows) {
    out += std::to_string(row.trial);
    for (const auto& [k, v] : row.metrics) out += fmt::format(",{:.17g}", v);
    out += "\n";
  }
  return out;
}

namespace {

// from_chars, unlike stod, accepts subnormals and ignores the locale.
template <class T>
T parse_number(const std::string& cell) {
  T value{};
  const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || end != cell.data() + cell.size()) throw std::invalid_argument("csv: cannot parse '" + cell + "'");
  return value;
}

}  // namespace

std::vector<Row> rows_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) return {};
  std::vector<std::string> header;
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) header.push_back(cell);
  }
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    Row row;
    std::size_t col = 0;
    while (std::getline(ls, cell, ',')) {
      if (col == 0) {
        row.trial = parse_number<std::int64_t>(cell);
      } else if (col < header.size()) {
        row.add(header[col], parse_number<double>(cell));
      }
      ++col;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

RunRecord persist(const std::filesystem::path& out_dir, const std::string& command, std::uint64_t master_seed,
                  const CommandOutput& output) {
  RunRecord rec;
  rec.command = command;
  rec.parameters = output.parameters;
  rec.master_seed = master_seed;
  rec.metrics = output.metrics;
  rec.run_id = compute_run_id(command, output.parameters, master_seed);
  rec.timestamp = iso8601_now();

  const auto dir = out_dir / rec.run_id;
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    f << content;
    rec.artifact_paths.push_back((dir / name).string());
  };

  std::string jsonl;
  for (const auto& row : output.rows) jsonl += row_to_jsonl(row) + "\n";
  write("rows.jsonl", jsonl);
  write("export.csv", rows_to_csv(output.rows));
  for (const auto& [name, content] : output.artifacts) write(name, content.dump() + "\n");

  std::ofstream f(dir / "record.json", std::ios::binary);
  if (!f) throw std::runtime_error("cannot write record.json");
  f << to_json(rec).dump(2) << "\n";
  return rec;
}

}  // namespace rlab::cli
