#pragma once

// Prompt construction, chat-completion transport, reply extraction and
// explanation reports.

#include <atomic>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dfjss/objectives.hpp"
#include "dfjss/rule_pair.hpp"

namespace dfjss::llm {

struct ReferenceHeuristic {
  RulePair rules;
  std::string provenance;  // scenario it was evolved for
  std::string note;        // optional, e.g. a fitness remark
};

struct PreferenceWeights {
  std::vector<Objective> objectives;
  std::vector<double> lambdas;
};

/// Preferences taken from the scenario's objectives and lambdas.
PreferenceWeights preferences_of(const Scenario& scenario);

/// "0.2×Fmean + 0.8×WTmean". Throws std::invalid_argument on malformed weights.
std::string objective_expression(const PreferenceWeights& prefs);

struct PromptSection {
  std::string title;
  std::string body;
};

struct PromptSpec {
  std::string kind;  // init | transfer | explain
  std::vector<PromptSection> sections;
  bool zero_shot = false;  // init without reference heuristics
  std::string text;        // rendered sections
};

/// Terminal glossary, one "- NAME: description" line per terminal.
std::string terminal_glossary();

/// Sections: problem context, reference heuristics and terminal semantics,
/// task preferences, output format.
PromptSpec build_init_prompt(const Scenario& scenario, const std::vector<ReferenceHeuristic>& references,
                             const PreferenceWeights& prefs, int n_requested);

/// Throws std::invalid_argument when source and target define the same task
/// (objectives, lambdas and utilization all equal).
PromptSpec build_transfer_prompt(const std::vector<ReferenceHeuristic>& source_refs, const Scenario& source,
                                 const Scenario& target, const PreferenceWeights& prefs, int n_requested,
                                 std::string_view insights = {});

/// Throws std::invalid_argument when the scenario has no objectives.
PromptSpec build_explain_prompt(const RulePair& best, const Scenario& scenario);

// ---------------------------------------------------------------------------
// Provider

struct ProviderConfig {
  std::string kind = "mock";  // mock | openai
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4";
  std::string credential_env = "OPENAI_API_KEY";
  double temperature = 0.7;
  int max_tokens = 4096;
  double timeout_seconds = 120;
  int retry_budget = 2;
  double retry_backoff_seconds = 1.0;
  std::string mock_dir;   // mock replies: <mock_dir>/<prompt sha256>.txt
  std::string audit_log;  // JSON lines, appended; empty disables auditing
};

/// Throws std::invalid_argument on the first bad field.
void validate(const ProviderConfig& config);

class ProviderError : public std::runtime_error {
 public:
  enum class Kind { Auth, Timeout, Malformed, Http, MissingReply };
  ProviderError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

std::string_view to_string(ProviderError::Kind k);

/// One request/response exchange. Implementations throw ProviderError; Timeout
/// and transient Http failures are retried by query().
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  /// Returns the raw response body for a chat-completion request body.
  virtual std::string post(const ProviderConfig& config, const std::string& body, const std::string& api_key) = 0;
};

/// HTTP(S) transport. attempts() counts every request it starts.
class HttpTransport : public ChatTransport {
 public:
  std::string post(const ProviderConfig& config, const std::string& body, const std::string& api_key) override;
  static long attempts() noexcept { return attempts_.load(); }

 private:
  static inline std::atomic<long> attempts_{0};
};

/// Replays canned replies keyed by the SHA-256 of the prompt text, wrapped in
/// the chat-completion response format.
class MockTransport : public ChatTransport {
 public:
  explicit MockTransport(std::string dir) : dir_(std::move(dir)) {}
  std::string post(const ProviderConfig& config, const std::string& body, const std::string& api_key) override;

 private:
  std::string dir_;
};

std::string sha256_hex(std::string_view data);

/// Digest used to key mock replies.
inline std::string prompt_digest(const PromptSpec& prompt) { return sha256_hex(prompt.text); }

/// Chat-completion request body: {model, messages, temperature, max_tokens}.
std::string request_body(const ProviderConfig& config, const std::string& prompt_text);

/// Message content of a chat-completion response. Throws ProviderError(Malformed).
std::string reply_content(const std::string& response_body);

/// Sends the prompt and returns the reply text. Non-mock providers need the
/// credential environment variable; without it this throws Auth before any
/// request. Timeouts and transient failures are retried retry_budget times.
/// Each attempt is appended to the audit log. `transport` overrides the
/// transport chosen from config.kind.
std::string query(const ProviderConfig& config, const PromptSpec& prompt, ChatTransport* transport = nullptr);

// ---------------------------------------------------------------------------
// Replies

enum class RejectCause { Syntax, UnknownSymbol, Arity, Depth, MissingHalf };

std::string_view to_string(RejectCause c);

struct RejectedCandidate {
  std::string snippet;
  RejectCause cause;
  std::string detail;
};

struct ExtractionResult {
  std::vector<RulePair> accepted;
  std::vector<RejectedCandidate> rejected;
  std::string insights;  // body of the "Insights" section, if any
  std::string raw;

  std::size_t candidates() const noexcept { return accepted.size() + rejected.size(); }
};

/// Collects "routing:" / "sequencing:" line pairs (normally inside fenced
/// blocks). A pair is accepted when both halves parse and have depth <= 8.
ExtractionResult extract_heuristics(std::string_view reply, int max_depth = 8);

/// Rule pairs file text with a comment header listing rejections.
std::string format_seeds_file(const ExtractionResult& result);

// ---------------------------------------------------------------------------
// Reports

struct Report {
  std::string text;
  bool narrative_available = false;
  std::string error;  // provider failure, when the narrative is missing
};

inline constexpr std::string_view kNarrativeUnavailable = "_Narrative unavailable._";

/// Machine-generated appendix: genome, depth and size, terminal histogram
/// table, optional test performance.
std::string report_appendix(const RulePair& best, const Scenario& scenario, std::optional<double> test_performance);

/// Explain prompt + query + appendix. Provider failures are caught and turned
/// into an appendix-only report.
Report generate_report(const RulePair& best, const Scenario& scenario, const ProviderConfig& provider,
                       std::optional<double> test_performance = std::nullopt, ChatTransport* transport = nullptr);

}  // namespace dfjss::llm
