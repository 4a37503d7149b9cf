#pragma once

// Priority-rule expression language: terminals, binary functions, immutable
// trees, evaluation, random generation, textual grammar and tree metrics.

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dfjss {

enum class Terminal : std::uint8_t {
  NIQ,    // number of operations in the queue
  WIQ,    // work in the queue
  MWT,    // machine waiting time, t - machine ready time
  PT,     // processing time of the operation
  NPT,    // median processing time of the next operation
  OWT,    // operation waiting time, t - operation ready time
  WKR,    // work remaining
  NOR,    // number of operations remaining
  rDD,    // relative due date, due date - t
  SLACK,  // rDD - WKR
  W,      // job weight
  TIS,    // time in system, t - release time
  TRANT,  // transportation time
};

inline constexpr std::size_t kTerminalCount = 13;

inline constexpr std::array<Terminal, kTerminalCount> kAllTerminals = {
    Terminal::NIQ, Terminal::WIQ,   Terminal::MWT, Terminal::PT,  Terminal::NPT,
    Terminal::OWT, Terminal::WKR,   Terminal::NOR, Terminal::rDD, Terminal::SLACK,
    Terminal::W,   Terminal::TIS,   Terminal::TRANT};

enum class Function : std::uint8_t { Add, Sub, Mul, Div, Min, Max };

inline constexpr std::size_t kFunctionCount = 6;

inline constexpr std::array<Function, kFunctionCount> kAllFunctions = {
    Function::Add, Function::Sub, Function::Mul,
    Function::Div, Function::Min, Function::Max};

std::string_view to_string(Terminal t);
std::string_view to_string(Function f);
std::optional<Terminal> terminal_from_string(std::string_view name);

/// One-line glossary entry for a terminal, as shown to users and in prompts.
std::string_view describe(Terminal t);

/// Snapshot of the scheduling state seen by a rule at one decision point.
struct DecisionContext {
  double niq = 0;
  double wiq = 0;
  double mwt = 0;
  double pt = 0;
  double npt = 0;
  double owt = 0;
  double wkr = 0;
  double nor = 0;
  double rdd = 0;
  double slack = 0;
  double w = 0;
  double tis = 0;
  double trant = 0;

  double operator[](Terminal t) const noexcept;
  double& operator[](Terminal t) noexcept;
};

/// Binary function semantics. Div is protected: a zero denominator yields 1.
/// Results that overflow saturate at the largest finite double.
double apply(Function f, double lhs, double rhs) noexcept;

/// Immutable expression tree with shared structure. Copies are cheap and
/// safe to evaluate concurrently.
class Expr {
 public:
  static Expr leaf(Terminal t);
  static Expr call(Function f, Expr lhs, Expr rhs);

  bool is_leaf() const noexcept;
  Terminal terminal() const;  // requires is_leaf()
  Function function() const;  // requires !is_leaf()
  const Expr& lhs() const;    // requires !is_leaf()
  const Expr& rhs() const;    // requires !is_leaf()

  /// A lone terminal has depth 1.
  int depth() const noexcept;
  /// Total node count.
  int size() const noexcept;

  double evaluate(const DecisionContext& ctx) const noexcept;

  /// Node at `index` in preorder (root is 0).
  Expr subtree(int index) const;
  /// Level of the node at `index` in preorder, root level is 1.
  int level_of(int index) const;
  /// Copy of this tree with the preorder node at `index` replaced.
  Expr replace(int index, const Expr& replacement) const;

  friend bool operator==(const Expr& a, const Expr& b) noexcept;

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

double evaluate(const Expr& expr, const DecisionContext& ctx) noexcept;
inline int depth(const Expr& e) noexcept { return e.depth(); }
inline int size(const Expr& e) noexcept { return e.size(); }

using TerminalHistogram = std::map<Terminal, int>;

/// Leaf counts per terminal. Terminals that do not occur are absent.
TerminalHistogram terminal_histogram(const Expr& expr);

// ---------------------------------------------------------------------------
// Grammar
//
//   expr   := term (("+" | "-") term)*
//   term   := factor (("*" | "/") factor)*
//   factor := TERMINAL | "min(" expr "," expr ")" | "max(" expr "," expr ")"
//           | "(" expr ")"

class ParseError : public std::runtime_error {
 public:
  enum class Kind { Syntax, UnknownSymbol, Arity };

  ParseError(Kind kind, std::size_t offset, std::string token, const std::string& what);

  Kind kind() const noexcept { return kind_; }
  /// Byte offset into the parsed text.
  std::size_t offset() const noexcept { return offset_; }
  /// Offending token, empty at end of input.
  const std::string& token() const noexcept { return token_; }

 private:
  Kind kind_;
  std::size_t offset_;
  std::string token_;
};

std::string_view to_string(ParseError::Kind k);

Expr parse(std::string_view text);

/// Canonical, fully parenthesized text. parse(format(e)) == e.
std::string format(const Expr& expr);

// ---------------------------------------------------------------------------
// Random generation

enum class TreeMode { Full, Grow };

inline constexpr double kDefaultTerminalRate = 0.10;
inline constexpr int kMaxSupportedDepth = 8;

/// Full mode draws a target depth uniformly from [min_depth, max_depth] and
/// places every leaf at exactly that depth. Grow mode places functions at
/// levels below min_depth, terminals at max_depth, and between the two draws
/// a terminal with probability `terminal_rate`.
Expr random_tree(std::mt19937_64& rng, TreeMode mode, int min_depth, int max_depth,
                 double terminal_rate = kDefaultTerminalRate);

}  // namespace dfjss
