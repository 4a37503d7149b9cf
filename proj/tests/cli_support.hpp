#pragma once

// Runs dfjss commands in-process and prepares mock provider replies.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "dfjss/cli.hpp"
#include "dfjss/expr.hpp"

namespace dfjss::test {

namespace fs = std::filesystem;

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

inline CliResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("dfjss-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream(path, std::ios::binary) << text;
}

inline std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Trims the output of a --dump-prompt run to the digest.
inline std::string digest_of(const CliResult& r) {
  std::string d = r.out;
  while (!d.empty() && (d.back() == '\n' || d.back() == '\r')) d.pop_back();
  return d;
}

/// Writes a mock provider file pointing at `mock_dir`.
inline void write_mock_provider(const fs::path& file, const fs::path& mock_dir, const fs::path& audit_log = {}) {
  std::string json = "{\"kind\": \"mock\", \"mock_dir\": \"" + mock_dir.string() + "\"";
  if (!audit_log.empty()) json += ", \"audit_log\": \"" + audit_log.string() + "\"";
  write_text(file, json + "}\n");
}

/// Parses the "| Terminal | Routing | Sequencing |" table of a report.
inline std::pair<TerminalHistogram, TerminalHistogram> report_histograms(const std::string& report) {
  std::pair<TerminalHistogram, TerminalHistogram> h;
  std::istringstream in(report.substr(report.find("| Terminal | Routing | Sequencing |")));
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  while (std::getline(in, line) && line.starts_with("| ")) {
    std::istringstream ls(line);
    std::string bar, name;
    int r = 0, s = 0;
    ls >> bar >> name >> bar >> r >> bar >> s;
    const auto t = terminal_from_string(name);
    if (!t) break;
    if (r) h.first[*t] = r;
    if (s) h.second[*t] = s;
  }
  return h;
}

}  // namespace dfjss::test
