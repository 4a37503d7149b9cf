#include "dfjss/expr.hpp"

#include <algorithm>
#include <cassert>
#include <cctype>
#include <limits>
#include <vector>

namespace dfjss {

namespace {

constexpr std::array<std::string_view, kTerminalCount> kTerminalNames = {
    "NIQ", "WIQ", "MWT", "PT", "NPT", "OWT", "WKR", "NOR", "rDD", "SLACK", "W", "TIS", "TRANT"};

constexpr std::array<std::string_view, kTerminalCount> kTerminalGlossary = {
    "Number of operations in the queue",
    "Work in the queue",
    "Machine waiting time = t - MRT (t: current time; MRT: machine ready time)",
    "Processing time of the operation",
    "Median processing time of the next operation",
    "Operation waiting time = t - ORT (ORT: operation ready time)",
    "Work remaining",
    "Number of operations remaining",
    "Relative due date = DD - t (DD: due date)",
    "Job slack time",
    "Job weight",
    "Time in system = t - releaseTime",
    "Transportation time",
};

}  // namespace

std::string_view to_string(Terminal t) { return kTerminalNames[static_cast<std::size_t>(t)]; }

std::string_view to_string(Function f) {
  switch (f) {
    case Function::Add: return "+";
    case Function::Sub: return "-";
    case Function::Mul: return "*";
    case Function::Div: return "/";
    case Function::Min: return "min";
    case Function::Max: return "max";
  }
  return "?";
}

std::optional<Terminal> terminal_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kTerminalCount; ++i) {
    if (kTerminalNames[i] == name) return static_cast<Terminal>(i);
  }
  return std::nullopt;
}

std::string_view describe(Terminal t) { return kTerminalGlossary[static_cast<std::size_t>(t)]; }

double DecisionContext::operator[](Terminal t) const noexcept {
  return const_cast<DecisionContext&>(*this)[t];
}

double& DecisionContext::operator[](Terminal t) noexcept {
  switch (t) {
    case Terminal::NIQ: return niq;
    case Terminal::WIQ: return wiq;
    case Terminal::MWT: return mwt;
    case Terminal::PT: return pt;
    case Terminal::NPT: return npt;
    case Terminal::OWT: return owt;
    case Terminal::WKR: return wkr;
    case Terminal::NOR: return nor;
    case Terminal::rDD: return rdd;
    case Terminal::SLACK: return slack;
    case Terminal::W: return w;
    case Terminal::TIS: return tis;
    case Terminal::TRANT: return trant;
  }
  return niq;
}

namespace {

// Finite inputs can still overflow under +, -, * and /; saturating keeps every
// intermediate finite so no inf - inf or 0 * inf can arise further up.
double saturate(double v) noexcept {
  constexpr double kMax = std::numeric_limits<double>::max();
  if (v > kMax) return kMax;
  if (v < -kMax) return -kMax;
  return v;
}

}  // namespace

double apply(Function f, double lhs, double rhs) noexcept {
  switch (f) {
    case Function::Add: return saturate(lhs + rhs);
    case Function::Sub: return saturate(lhs - rhs);
    case Function::Mul: return saturate(lhs * rhs);
    case Function::Div: return rhs == 0.0 ? 1.0 : saturate(lhs / rhs);
    case Function::Min: return std::min(lhs, rhs);
    case Function::Max: return std::max(lhs, rhs);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------

struct Expr::Node {
  bool leaf = true;
  Terminal terminal = Terminal::NIQ;
  Function function = Function::Add;
  std::optional<Expr> lhs;
  std::optional<Expr> rhs;
  int depth = 1;
  int size = 1;
};

Expr Expr::leaf(Terminal t) {
  auto n = std::make_shared<Node>();
  n->terminal = t;
  return Expr(std::move(n));
}

Expr Expr::call(Function f, Expr lhs, Expr rhs) {
  auto n = std::make_shared<Node>();
  n->leaf = false;
  n->function = f;
  n->depth = 1 + std::max(lhs.depth(), rhs.depth());
  n->size = 1 + lhs.size() + rhs.size();
  n->lhs.emplace(std::move(lhs));
  n->rhs.emplace(std::move(rhs));
  return Expr(std::move(n));
}

bool Expr::is_leaf() const noexcept { return node_->leaf; }

Terminal Expr::terminal() const {
  if (!node_->leaf) throw std::logic_error("terminal() on a function node");
  return node_->terminal;
}

Function Expr::function() const {
  if (node_->leaf) throw std::logic_error("function() on a leaf");
  return node_->function;
}

const Expr& Expr::lhs() const {
  if (node_->leaf) throw std::logic_error("lhs() on a leaf");
  return *node_->lhs;
}

const Expr& Expr::rhs() const {
  if (node_->leaf) throw std::logic_error("rhs() on a leaf");
  return *node_->rhs;
}

int Expr::depth() const noexcept { return node_->depth; }
int Expr::size() const noexcept { return node_->size; }

double Expr::evaluate(const DecisionContext& ctx) const noexcept {
  const Node& n = *node_;
  if (n.leaf) return ctx[n.terminal];
  return apply(n.function, n.lhs->evaluate(ctx), n.rhs->evaluate(ctx));
}

Expr Expr::subtree(int index) const {
  if (index < 0 || index >= size()) throw std::out_of_range("subtree index out of range");
  const Expr* cur = this;
  while (index > 0) {
    const Expr& l = cur->lhs();
    if (index <= l.size()) {
      index -= 1;
      cur = &l;
    } else {
      index -= 1 + l.size();
      cur = &cur->rhs();
    }
  }
  return *cur;
}

int Expr::level_of(int index) const {
  if (index < 0 || index >= size()) throw std::out_of_range("subtree index out of range");
  const Expr* cur = this;
  int level = 1;
  while (index > 0) {
    const Expr& l = cur->lhs();
    ++level;
    if (index <= l.size()) {
      index -= 1;
      cur = &l;
    } else {
      index -= 1 + l.size();
      cur = &cur->rhs();
    }
  }
  return level;
}

Expr Expr::replace(int index, const Expr& replacement) const {
  if (index < 0 || index >= size()) throw std::out_of_range("subtree index out of range");
  if (index == 0) return replacement;
  const Expr& l = lhs();
  if (index <= l.size()) return call(function(), l.replace(index - 1, replacement), rhs());
  return call(function(), l, rhs().replace(index - 1 - l.size(), replacement));
}

bool operator==(const Expr& a, const Expr& b) noexcept {
  if (a.node_ == b.node_) return true;
  const auto& x = *a.node_;
  const auto& y = *b.node_;
  if (x.leaf != y.leaf || x.size != y.size || x.depth != y.depth) return false;
  if (x.leaf) return x.terminal == y.terminal;
  return x.function == y.function && *x.lhs == *y.lhs && *x.rhs == *y.rhs;
}

double evaluate(const Expr& expr, const DecisionContext& ctx) noexcept { return expr.evaluate(ctx); }

TerminalHistogram terminal_histogram(const Expr& expr) {
  TerminalHistogram hist;
  std::vector<const Expr*> stack{&expr};
  while (!stack.empty()) {
    const Expr* e = stack.back();
    stack.pop_back();
    if (e->is_leaf()) {
      ++hist[e->terminal()];
    } else {
      stack.push_back(&e->rhs());
      stack.push_back(&e->lhs());
    }
  }
  return hist;
}

// ---------------------------------------------------------------------------
// Printer

namespace {

void format_into(const Expr& e, std::string& out) {
  if (e.is_leaf()) {
    out += to_string(e.terminal());
    return;
  }
  const Function f = e.function();
  if (f == Function::Min || f == Function::Max) {
    out += to_string(f);
    out += '(';
    format_into(e.lhs(), out);
    out += ", ";
    format_into(e.rhs(), out);
    out += ')';
    return;
  }
  out += '(';
  format_into(e.lhs(), out);
  out += ' ';
  out += to_string(f);
  out += ' ';
  format_into(e.rhs(), out);
  out += ')';
}

}  // namespace

std::string format(const Expr& expr) {
  std::string out;
  out.reserve(static_cast<std::size_t>(expr.size()) * 6);
  format_into(expr, out);
  return out;
}

// ---------------------------------------------------------------------------
// Parser

ParseError::ParseError(Kind kind, std::size_t offset, std::string token, const std::string& what)
    : std::runtime_error(what), kind_(kind), offset_(offset), token_(std::move(token)) {}

std::string_view to_string(ParseError::Kind k) {
  switch (k) {
    case ParseError::Kind::Syntax: return "syntax";
    case ParseError::Kind::UnknownSymbol: return "unknown symbol";
    case ParseError::Kind::Arity: return "arity";
  }
  return "?";
}

namespace {

struct Token {
  enum class Kind { Ident, Number, Punct, End } kind;
  std::string_view text;
  std::size_t offset;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) { advance(); }

  Expr parse_all() {
    Expr e = expr();
    if (tok_.kind != Token::Kind::End) fail_syntax("unexpected token");
    return e;
  }

 private:
  Expr expr() {
    Expr lhs = term();
    while (is_punct("+") || is_punct("-")) {
      const Function f = tok_.text == "+" ? Function::Add : Function::Sub;
      advance();
      lhs = Expr::call(f, std::move(lhs), term());
    }
    return lhs;
  }

  Expr term() {
    Expr lhs = factor();
    while (is_punct("*") || is_punct("/")) {
      const Function f = tok_.text == "*" ? Function::Mul : Function::Div;
      advance();
      lhs = Expr::call(f, std::move(lhs), factor());
    }
    return lhs;
  }

  Expr factor() {
    if (is_punct("(")) {
      advance();
      Expr inner = expr();
      expect(")");
      return inner;
    }
    if (tok_.kind == Token::Kind::Number) {
      throw ParseError(ParseError::Kind::Syntax, tok_.offset, std::string(tok_.text),
                       "numeric constant '" + std::string(tok_.text) + "' at offset " +
                           std::to_string(tok_.offset) + " is not allowed");
    }
    if (tok_.kind != Token::Kind::Ident) fail_syntax("expected a terminal, min( or max(");

    const Token name = tok_;
    advance();
    if (is_punct("(")) {
      if (name.text != "min" && name.text != "max") {
        throw ParseError(ParseError::Kind::UnknownSymbol, name.offset, std::string(name.text),
                         "unknown function '" + std::string(name.text) + "' at offset " +
                             std::to_string(name.offset));
      }
      return call_args(name);
    }
    if (auto t = terminal_from_string(name.text)) return Expr::leaf(*t);
    throw ParseError(ParseError::Kind::UnknownSymbol, name.offset, std::string(name.text),
                     "unknown symbol '" + std::string(name.text) + "' at offset " +
                         std::to_string(name.offset));
  }

  Expr call_args(const Token& name) {
    const Function f = name.text == "min" ? Function::Min : Function::Max;
    advance();  // '('
    if (is_punct(")")) fail_arity(name, 0);
    Expr a = expr();
    if (is_punct(")")) fail_arity(name, 1);
    expect(",");
    Expr b = expr();
    if (is_punct(",")) fail_arity(name, 3);
    expect(")");
    return Expr::call(f, std::move(a), std::move(b));
  }

  [[noreturn]] void fail_arity(const Token& name, int got) {
    std::string what = std::string(name.text) + " at offset " + std::to_string(name.offset) +
                       " takes 2 arguments, got " + (got > 2 ? "more than 2" : std::to_string(got));
    throw ParseError(ParseError::Kind::Arity, name.offset, std::string(name.text), what);
  }

  [[noreturn]] void fail_syntax(const std::string& msg) {
    const std::string shown = tok_.kind == Token::Kind::End ? "end of input" : "'" + std::string(tok_.text) + "'";
    throw ParseError(ParseError::Kind::Syntax, tok_.offset, std::string(tok_.text),
                     msg + ": " + shown + " at offset " + std::to_string(tok_.offset));
  }

  void expect(std::string_view p) {
    if (!is_punct(p)) fail_syntax("expected '" + std::string(p) + "'");
    advance();
  }

  bool is_punct(std::string_view p) const { return tok_.kind == Token::Kind::Punct && tok_.text == p; }

  void advance() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    const std::size_t start = pos_;
    if (pos_ >= text_.size()) {
      tok_ = {Token::Kind::End, {}, start};
      return;
    }
    const char c = text_[pos_];
    if (ident_start(c)) {
      while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
      tok_ = {Token::Kind::Ident, text_.substr(start, pos_ - start), start};
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
        ++pos_;
      tok_ = {Token::Kind::Number, text_.substr(start, pos_ - start), start};
      return;
    }
    if (std::string_view("+-*/(),").find(c) != std::string_view::npos) {
      ++pos_;
      tok_ = {Token::Kind::Punct, text_.substr(start, 1), start};
      return;
    }
    // Consume one UTF-8 code point so the reported token is printable.
    std::size_t len = 1;
    const auto uc = static_cast<unsigned char>(c);
    if (uc >= 0xF0) len = 4;
    else if (uc >= 0xE0) len = 3;
    else if (uc >= 0xC0) len = 2;
    len = std::min(len, text_.size() - start);
    throw ParseError(ParseError::Kind::Syntax, start, std::string(text_.substr(start, len)),
                     "unexpected character '" + std::string(text_.substr(start, len)) +
                         "' at offset " + std::to_string(start));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  Token tok_{Token::Kind::End, {}, 0};
};

}  // namespace

Expr parse(std::string_view text) { return Parser(text).parse_all(); }

// ---------------------------------------------------------------------------
// Random generation

namespace {

Terminal random_terminal(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, kTerminalCount - 1);
  return kAllTerminals[pick(rng)];
}

Function random_function(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, kFunctionCount - 1);
  return kAllFunctions[pick(rng)];
}

Expr build_full(std::mt19937_64& rng, int level, int target) {
  if (level >= target) return Expr::leaf(random_terminal(rng));
  const Function f = random_function(rng);
  Expr l = build_full(rng, level + 1, target);
  Expr r = build_full(rng, level + 1, target);
  return Expr::call(f, std::move(l), std::move(r));
}

Expr build_grow(std::mt19937_64& rng, int level, int min_depth, int max_depth, double terminal_rate) {
  bool terminal = level >= max_depth;
  if (!terminal && level >= min_depth) {
    std::bernoulli_distribution coin(terminal_rate);
    terminal = coin(rng);
  }
  if (terminal) return Expr::leaf(random_terminal(rng));
  const Function f = random_function(rng);
  Expr l = build_grow(rng, level + 1, min_depth, max_depth, terminal_rate);
  Expr r = build_grow(rng, level + 1, min_depth, max_depth, terminal_rate);
  return Expr::call(f, std::move(l), std::move(r));
}

}  // namespace

Expr random_tree(std::mt19937_64& rng, TreeMode mode, int min_depth, int max_depth,
                 double terminal_rate) {
  if (min_depth < 1 || max_depth > kMaxSupportedDepth || min_depth > max_depth) {
    throw std::invalid_argument("random_tree depth range must satisfy 1 <= min <= max <= 8");
  }
  if (!(terminal_rate >= 0.0 && terminal_rate <= 1.0)) {
    throw std::invalid_argument("random_tree terminal rate must lie in [0, 1]");
  }
  if (mode == TreeMode::Full) {
    std::uniform_int_distribution<int> pick(min_depth, max_depth);
    return build_full(rng, 1, pick(rng));
  }
  return build_grow(rng, 1, min_depth, max_depth, terminal_rate);
}

}  // namespace dfjss
