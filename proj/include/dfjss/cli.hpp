#pragma once

// The dfjss command-line tool: configuration files and subcommands.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dfjss/gp.hpp"
#include "dfjss/instance.hpp"
#include "dfjss/llm.hpp"
#include "dfjss/objectives.hpp"

namespace dfjss::cli {

enum ExitCode { kOk = 0, kConfigError = 2, kProviderError = 3, kDataError = 4 };

/// Error carrying the process exit code.
class CliError : public std::runtime_error {
 public:
  CliError(int code, const std::string& what) : std::runtime_error(what), code_(code) {}
  int code() const noexcept { return code_; }

 private:
  int code_;
};

struct Config {
  SimConfig sim;
  GPParams gp;
};

/// JSON files. Unknown keys are rejected; missing keys keep their defaults.
/// All loaders throw CliError(kConfigError).
Config load_config(const std::filesystem::path& path);
Scenario load_scenario(const std::filesystem::path& path);
/// Relative mock_dir and audit_log paths resolve against the file's directory.
llm::ProviderConfig load_provider(const std::filesystem::path& path);

std::string config_to_json(const Config& config);

struct Manifest {
  std::filesystem::path config;      // empty: built-in defaults
  std::filesystem::path scenario;
  std::string init = "random";       // random | llm | file
  std::filesystem::path seeds_file;  // init = file
  std::filesystem::path references;  // init = llm, rule pairs file
  std::string references_label;
  int n_requested = 100;
  std::filesystem::path provider;
  int runs = 1;
  std::uint64_t master_seed = 1;
  std::filesystem::path out = "out";
  std::string method;  // record label, defaults by init mode
  int jobs = 1;        // parallel runs
  int threads = 1;     // evaluation threads per run
};

/// Paths in the manifest resolve against the manifest's directory.
Manifest load_manifest(const std::filesystem::path& path);

/// Writes via a temporary file in the same directory and a rename.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Runs one command line (without the program name). Output goes to `out`,
/// diagnostics to `err`. Returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dfjss::cli
