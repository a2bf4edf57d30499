#pragma once

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace swave::cli {

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

inline std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes through a temporary sibling and renames it into place.
inline void write_atomic(const std::filesystem::path& p, const std::string& bytes) {
  std::filesystem::create_directories(p.parent_path());
  auto tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, p);
}

// Shortest text that reads back to the same double.
inline std::string fmt(double v) {
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

// CSV table whose first line carries the config digest.
class CsvTable {
 public:
  CsvTable(std::string digest, std::vector<std::string> header)
      : digest_(std::move(digest)), header_(std::move(header)) {}

  CsvTable& row(const std::vector<std::string>& cells) {
    if (cells.size() != header_.size()) throw std::logic_error("CSV row has the wrong width");
    rows_.push_back(cells);
    return *this;
  }

  std::string text() const {
    std::string s = "# config_digest=" + digest_ + "\n";
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) s += (i ? "," : "") + cells[i];
      s += "\n";
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return s;
  }

 private:
  std::string digest_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline std::string utc_timestamp() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct SuiteOutcome {
  std::string name;
  bool passed = false;
  std::string error;  // set when the suite stopped on an exception
};

// Reproducibility record written once, atomically, when the run ends.
class RunManifest {
 public:
  RunManifest(std::filesystem::path root, std::string digest, std::string version)
      : root_(std::move(root)), digest_(std::move(digest)), version_(std::move(version)),
        started_(utc_timestamp()) {}

  const std::string& digest() const noexcept { return digest_; }
  const std::filesystem::path& root() const noexcept { return root_; }

  // Writes an output file under the run root and records it.
  void emit(const std::string& relative, const std::string& bytes) {
    write_atomic(root_ / relative, bytes);
    files_.push_back({relative, sha256_hex(bytes), bytes.size()});
  }
  void emit_json(const std::string& relative, nlohmann::json j) {
    j["config_digest"] = digest_;
    emit(relative, j.dump(2) + "\n");
  }
  void emit_csv(const std::string& relative, const CsvTable& t) { emit(relative, t.text()); }

  void record(SuiteOutcome o) { suites_.push_back(std::move(o)); }
  const std::vector<SuiteOutcome>& suites() const noexcept { return suites_; }
  bool all_passed() const {
    for (const auto& s : suites_)
      if (!s.passed) return false;
    return !suites_.empty();
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["config_digest"] = digest_;
    j["artifact_version"] = version_;
    j["started"] = started_;
    j["finished"] = utc_timestamp();
    j["passed"] = all_passed();
    j["suites"] = nlohmann::json::array();
    for (const auto& s : suites_) {
      nlohmann::json e{{"name", s.name}, {"passed", s.passed}};
      if (!s.error.empty()) e["error"] = s.error;
      j["suites"].push_back(e);
    }
    j["files"] = nlohmann::json::array();
    for (const auto& f : files_)
      j["files"].push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    return j;
  }

  void write() const { write_atomic(root_ / "manifest.json", to_json().dump(2) + "\n"); }

 private:
  struct FileEntry {
    std::string path, sha256;
    std::size_t bytes;
  };
  std::filesystem::path root_;
  std::string digest_, version_, started_;
  std::vector<SuiteOutcome> suites_;
  std::vector<FileEntry> files_;
};

}  // namespace swave::cli
