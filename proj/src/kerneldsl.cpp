// Copyright 2026 The streamtune Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "streamtune/kerneldsl.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace streamtune {

// ---------------------------------------------------------------------------
// Expressions

struct Expr::Node {
  Kind kind;
  std::int64_t value = 0;
  std::string name;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

Expr Expr::literal(std::int64_t value) {
  return Expr(std::make_shared<const Node>(Node{Kind::kLiteral, value, {}, nullptr, nullptr}));
}

Expr Expr::param(std::string name) {
  return Expr(std::make_shared<const Node>(Node{Kind::kParam, 0, std::move(name), nullptr, nullptr}));
}

Expr Expr::binary(Kind op, Expr lhs, Expr rhs) {
  if (op == Kind::kLiteral || op == Kind::kParam) throw DomainError("Expr::binary needs an operator kind");
  return Expr(std::make_shared<const Node>(Node{op, 0, {}, lhs.node_, rhs.node_}));
}

Expr::Kind Expr::kind() const { return node_->kind; }
std::int64_t Expr::value() const { return node_->value; }
const std::string& Expr::name() const { return node_->name; }

Expr Expr::lhs() const {
  if (!node_->lhs) throw DomainError("expression leaf has no operands");
  return Expr(node_->lhs);
}

Expr Expr::rhs() const {
  if (!node_->rhs) throw DomainError("expression leaf has no operands");
  return Expr(node_->rhs);
}

namespace {

int precedence(Expr::Kind k) {
  switch (k) {
    case Expr::Kind::kAdd:
    case Expr::Kind::kSub:
      return 1;
    case Expr::Kind::kMul:
    case Expr::Kind::kDiv:
      return 2;
    default:
      return 3;
  }
}

char op_char(Expr::Kind k) {
  switch (k) {
    case Expr::Kind::kAdd: return '+';
    case Expr::Kind::kSub: return '-';
    case Expr::Kind::kMul: return '*';
    case Expr::Kind::kDiv: return '/';
    default: return '?';
  }
}

}  // namespace

struct ExprAccess {
  static const Expr::Node* node(const Expr& e) { return e.node_.get(); }

  static std::int64_t eval(const Expr::Node* n, const ParamMap& params) {
    switch (n->kind) {
      case Expr::Kind::kLiteral:
        return n->value;
      case Expr::Kind::kParam: {
        auto it = params.find(n->name);
        if (it == params.end()) throw DomainError("unbound parameter '" + n->name + "'");
        return it->second;
      }
      default:
        break;
    }
    const std::int64_t a = eval(n->lhs.get(), params);
    const std::int64_t b = eval(n->rhs.get(), params);
    std::int64_t r = 0;
    bool overflow = false;
    switch (n->kind) {
      case Expr::Kind::kAdd: overflow = __builtin_add_overflow(a, b, &r); break;
      case Expr::Kind::kSub: overflow = __builtin_sub_overflow(a, b, &r); break;
      case Expr::Kind::kMul: overflow = __builtin_mul_overflow(a, b, &r); break;
      case Expr::Kind::kDiv:
        if (b == 0) throw DomainError("division by zero in expression");
        if (a == INT64_MIN && b == -1) overflow = true;
        else r = a / b;
        break;
      default: break;
    }
    if (overflow) throw DomainError("expression overflow");
    return r;
  }

  static void print(const Expr::Node* n, std::string& out) {
    if (n->kind == Expr::Kind::kLiteral) {
      out += std::to_string(n->value);
      return;
    }
    if (n->kind == Expr::Kind::kParam) {
      out += n->name;
      return;
    }
    const int p = precedence(n->kind);
    const bool paren_l = precedence(n->lhs->kind) < p;
    const bool paren_r = precedence(n->rhs->kind) <= p;
    if (paren_l) out += '(';
    print(n->lhs.get(), out);
    if (paren_l) out += ')';
    out += ' ';
    out += op_char(n->kind);
    out += ' ';
    if (paren_r) out += '(';
    print(n->rhs.get(), out);
    if (paren_r) out += ')';
  }

  static bool equal(const Expr::Node* a, const Expr::Node* b) {
    if (a == b) return true;
    if (!a || !b || a->kind != b->kind) return false;
    switch (a->kind) {
      case Expr::Kind::kLiteral: return a->value == b->value;
      case Expr::Kind::kParam: return a->name == b->name;
      default: return equal(a->lhs.get(), b->lhs.get()) && equal(a->rhs.get(), b->rhs.get());
    }
  }

  static void params(const Expr::Node* n, std::vector<std::string>& out) {
    if (n->kind == Expr::Kind::kParam) {
      if (std::find(out.begin(), out.end(), n->name) == out.end()) out.push_back(n->name);
    } else if (n->lhs) {
      params(n->lhs.get(), out);
      params(n->rhs.get(), out);
    }
  }
};

namespace {

// Recursive-descent parser over a single expression string.
class ExprParser {
 public:
  ExprParser(std::string_view text, std::size_t line, std::size_t column)
      : text_(text), line_(line), column_(column) {}

  Expr parse() {
    Expr e = parse_sum();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "' in expression");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, line_, column_ + pos_); }

  void skip_space() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  Expr parse_sum() {
    Expr lhs = parse_product();
    for (;;) {
      skip_space();
      if (pos_ >= text_.size()) return lhs;
      const char c = text_[pos_];
      if (c != '+' && c != '-') return lhs;
      ++pos_;
      Expr rhs = parse_product();
      lhs = Expr::binary(c == '+' ? Expr::Kind::kAdd : Expr::Kind::kSub, lhs, rhs);
    }
  }

  Expr parse_product() {
    Expr lhs = parse_atom();
    for (;;) {
      skip_space();
      if (pos_ >= text_.size()) return lhs;
      const char c = text_[pos_];
      if (c != '*' && c != '/') return lhs;
      ++pos_;
      Expr rhs = parse_atom();
      lhs = Expr::binary(c == '*' ? Expr::Kind::kMul : Expr::Kind::kDiv, lhs, rhs);
    }
  }

  Expr parse_atom() {
    skip_space();
    if (pos_ >= text_.size()) fail("expected expression");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr inner = parse_sum();
      skip_space();
      if (pos_ >= text_.size() || text_[pos_] != ')') fail("expected ')'");
      ++pos_;
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::int64_t v = 0;
      const char* first = text_.data() + pos_;
      const char* last = text_.data() + text_.size();
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc()) fail("integer literal out of range");
      pos_ += static_cast<std::size_t>(ptr - first);
      return Expr::literal(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
        ++pos_;
      }
      return Expr::param(std::string(text_.substr(start, pos_ - start)));
    }
    fail("unexpected '" + std::string(1, c) + "' in expression");
  }

  std::string_view text_;
  std::size_t line_;
  std::size_t column_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr Expr::parse(std::string_view text, std::size_t line, std::size_t column) {
  return ExprParser(text, line, column).parse();
}

std::int64_t Expr::evaluate(const ParamMap& params) const { return ExprAccess::eval(node_.get(), params); }

std::vector<std::string> Expr::parameters() const {
  std::vector<std::string> out;
  ExprAccess::params(node_.get(), out);
  return out;
}

std::string Expr::to_string() const {
  std::string out;
  ExprAccess::print(node_.get(), out);
  return out;
}

bool operator==(const Expr& a, const Expr& b) {
  return ExprAccess::equal(ExprAccess::node(a), ExprAccess::node(b));
}

// ---------------------------------------------------------------------------
// Kernel files

std::size_t KernelSpec::parallel_loop() const {
  for (std::size_t i = 0; i < loops.size(); ++i) {
    if (loops[i].parallel) return i;
  }
  throw DomainError("kernel '" + name + "' has no parallel loop");
}

const ArraySpec& KernelSpec::array(std::string_view array_name) const {
  for (const auto& a : arrays) {
    if (a.name == array_name) return a;
  }
  throw DomainError("kernel '" + name + "' has no array '" + std::string(array_name) + "'");
}

namespace {

struct Token {
  std::string_view text;
  std::size_t column;  // 1-based
};

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size()) break;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    out.push_back({line.substr(start, i - start), start + 1});
  }
  return out;
}

bool is_identifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

std::int64_t parse_int(const Token& tok, std::size_t line, std::int64_t min_value) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), v);
  if (ec != std::errc() || ptr != tok.text.data() + tok.text.size()) {
    throw ParseError("expected integer, got '" + std::string(tok.text) + "'", line, tok.column);
  }
  if (v < min_value) {
    throw ParseError("integer must be >= " + std::to_string(min_value), line, tok.column);
  }
  return v;
}

double parse_rate(const Token& tok, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), v);
  if (ec != std::errc() || ptr != tok.text.data() + tok.text.size()) {
    throw ParseError("expected real number, got '" + std::string(tok.text) + "'", line, tok.column);
  }
  if (!(v >= 0.0 && v <= 1.0)) throw ParseError("rate must lie in [0,1]", line, tok.column);
  return v;
}

// Source text spanned by tokens [first, last).
std::string_view join_span(std::string_view line, const std::vector<Token>& toks, std::size_t first,
                           std::size_t last) {
  const std::size_t begin = toks[first].column - 1;
  const std::size_t end = toks[last - 1].column - 1 + toks[last - 1].text.size();
  return line.substr(begin, end - begin);
}

struct PendingRef {
  std::string name;
  std::size_t line;
  std::size_t column;
};

}  // namespace

KernelSpec parse_kernel(std::string_view source) {
  KernelSpec k;
  bool have_name = false;
  bool have_parallel = false;
  std::vector<PendingRef> param_refs;
  std::vector<PendingRef> transfer_refs;
  std::set<std::string, std::less<>> seen_singletons;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= source.size()) {
    std::size_t eol = source.find('\n', pos);
    if (eol == std::string_view::npos) eol = source.size();
    std::string_view line = source.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto toks = tokenize(line);
    if (toks.empty()) {
      if (eol == source.size()) break;
      continue;
    }
    const std::string_view directive = toks[0].text;
    const auto expect_args = [&](std::size_t n) {
      if (toks.size() != n + 1) {
        throw ParseError("'" + std::string(directive) + "' takes " + std::to_string(n) + " argument(s)",
                         line_no, toks[0].column);
      }
    };
    const auto once = [&] {
      if (!seen_singletons.insert(std::string(directive)).second) {
        throw ParseError("duplicate '" + std::string(directive) + "'", line_no, toks[0].column);
      }
    };
    const auto note_params = [&](const Expr& e, std::size_t column) {
      for (auto& p : e.parameters()) param_refs.push_back({p, line_no, column});
    };

    if (directive != "loop" && toks[0].column != 1) {
      throw ParseError("only loop lines may be indented", line_no, toks[0].column);
    }

    if (directive == "kernel") {
      expect_args(1);
      once();
      if (!is_identifier(toks[1].text)) throw ParseError("invalid kernel name", line_no, toks[1].column);
      k.name = std::string(toks[1].text);
      have_name = true;
    } else if (directive == "param") {
      if (toks.size() < 2) throw ParseError("'param' needs at least one name", line_no, toks[0].column);
      for (std::size_t i = 1; i < toks.size(); ++i) {
        if (!is_identifier(toks[i].text)) throw ParseError("invalid parameter name", line_no, toks[i].column);
        if (std::find(k.params.begin(), k.params.end(), toks[i].text) != k.params.end()) {
          throw ParseError("duplicate parameter '" + std::string(toks[i].text) + "'", line_no, toks[i].column);
        }
        k.params.emplace_back(toks[i].text);
      }
    } else if (directive == "array") {
      if (toks.size() < 5) {
        throw ParseError("'array' needs <name> <element_bytes> <length_expr> <in|out|inout>", line_no,
                         toks[0].column);
      }
      ArraySpec a;
      if (!is_identifier(toks[1].text)) throw ParseError("invalid array name", line_no, toks[1].column);
      a.name = std::string(toks[1].text);
      for (const auto& other : k.arrays) {
        if (other.name == a.name) throw ParseError("duplicate array '" + a.name + "'", line_no, toks[1].column);
      }
      a.element_bytes = static_cast<int>(parse_int(toks[2], line_no, 1));
      const std::string_view dir = toks.back().text;
      if (dir == "in") a.direction = Direction::kIn;
      else if (dir == "out") a.direction = Direction::kOut;
      else if (dir == "inout") a.direction = Direction::kInOut;
      else throw ParseError("direction must be in, out or inout", line_no, toks.back().column);
      a.length = Expr::parse(join_span(line, toks, 3, toks.size() - 1), line_no, toks[3].column);
      note_params(a.length, toks[3].column);
      k.arrays.push_back(std::move(a));
    } else if (directive == "loop") {
      const std::size_t indent = toks[0].column - 1;
      if (indent != 2 * k.loops.size()) {
        throw ParseError("loop must be indented by " + std::to_string(2 * k.loops.size()) +
                             " spaces (loops form a single perfect nest)",
                         line_no, toks[0].column);
      }
      if (toks.size() < 3) throw ParseError("'loop' needs <index> <trip_count_expr>", line_no, toks[0].column);
      LoopSpec l;
      if (!is_identifier(toks[1].text)) throw ParseError("invalid loop index", line_no, toks[1].column);
      l.index = std::string(toks[1].text);
      std::size_t expr_end = toks.size();
      if (toks.back().text == "parallel") {
        if (have_parallel) throw ParseError("duplicate parallel loop designation", line_no, toks.back().column);
        l.parallel = true;
        have_parallel = true;
        --expr_end;
      }
      if (expr_end <= 2) throw ParseError("'loop' needs a trip count expression", line_no, toks[0].column);
      l.trip_count = Expr::parse(join_span(line, toks, 2, expr_end), line_no, toks[2].column);
      note_params(l.trip_count, toks[2].column);
      k.loops.push_back(std::move(l));
    } else if (directive == "transfer") {
      expect_args(1);
      transfer_refs.push_back({std::string(toks[1].text), line_no, toks[1].column});
      k.transfers.emplace_back(toks[1].text);
    } else if (directive == "instructions") {
      expect_args(1);
      once();
      k.instruction_count = parse_int(toks[1], line_no, 0);
    } else if (directive == "ghost") {
      expect_args(1);
      once();
      k.ghost_elements = parse_int(toks[1], line_no, 0);
    } else if (directive == "branch_miss") {
      expect_args(1);
      once();
      k.branch_miss = parse_rate(toks[1], line_no);
    } else if (directive == "l1_miss") {
      expect_args(1);
      once();
      k.l1_miss = parse_rate(toks[1], line_no);
    } else {
      throw ParseError("unknown directive '" + std::string(directive) + "'", line_no, toks[0].column);
    }
    if (eol == source.size()) break;
  }

  if (!have_name) throw ParseError("missing 'kernel' line", 0, 0);
  if (k.loops.empty()) throw ParseError("kernel '" + k.name + "' declares no loop", 0, 0);
  if (!have_parallel) throw ParseError("kernel '" + k.name + "' has no loop marked parallel", 0, 0);

  for (const auto& ref : param_refs) {
    if (std::find(k.params.begin(), k.params.end(), ref.name) == k.params.end()) {
      throw UndeclaredReferenceError(ref.name, ref.line, ref.column);
    }
  }
  for (const auto& ref : transfer_refs) {
    const bool declared =
        std::any_of(k.arrays.begin(), k.arrays.end(), [&](const ArraySpec& a) { return a.name == ref.name; });
    if (!declared) throw UndeclaredReferenceError(ref.name, ref.line, ref.column);
  }
  return k;
}

KernelSpec load_kernel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open kernel file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_kernel(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), 0, 0);
  }
}

namespace {

const char* direction_name(Direction d) {
  switch (d) {
    case Direction::kIn: return "in";
    case Direction::kOut: return "out";
    case Direction::kInOut: return "inout";
  }
  return "in";
}

std::string format_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::string print_kernel(const KernelSpec& k) {
  std::string out = "kernel " + k.name + "\n";
  if (!k.params.empty()) {
    out += "param";
    for (const auto& p : k.params) out += " " + p;
    out += "\n";
  }
  for (const auto& a : k.arrays) {
    out += "array " + a.name + " " + std::to_string(a.element_bytes) + " " + a.length.to_string() + " " +
           direction_name(a.direction) + "\n";
  }
  for (std::size_t i = 0; i < k.loops.size(); ++i) {
    const auto& l = k.loops[i];
    out += std::string(2 * i, ' ') + "loop " + l.index + " " + l.trip_count.to_string();
    if (l.parallel) out += " parallel";
    out += "\n";
  }
  for (const auto& t : k.transfers) out += "transfer " + t + "\n";
  out += "instructions " + std::to_string(k.instruction_count) + "\n";
  out += "ghost " + std::to_string(k.ghost_elements) + "\n";
  out += "branch_miss " + format_real(k.branch_miss) + "\n";
  out += "l1_miss " + format_real(k.l1_miss) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Static features

std::vector<std::int64_t> trip_counts(const KernelSpec& kernel, const ParamMap& params) {
  std::vector<std::int64_t> out;
  out.reserve(kernel.loops.size());
  for (const auto& l : kernel.loops) {
    const std::int64_t n = l.trip_count.evaluate(params);
    if (n < 1) {
      throw DomainError("loop '" + l.index + "' of kernel '" + kernel.name + "' has trip count " +
                        std::to_string(n) + " < 1");
    }
    out.push_back(n);
  }
  return out;
}

namespace {

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r = 0;
  if (__builtin_mul_overflow(a, b, &r)) throw DomainError("expression overflow");
  return r;
}

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r = 0;
  if (__builtin_add_overflow(a, b, &r)) throw DomainError("expression overflow");
  return r;
}

}  // namespace

std::int64_t array_bytes(const KernelSpec&, const ArraySpec& array, const ParamMap& params) {
  const std::int64_t len = array.length.evaluate(params);
  if (len < 0) throw DomainError("array '" + array.name + "' has negative length");
  return checked_mul(len, array.element_bytes);
}

StaticFeatures extract_static_features(const KernelSpec& kernel, const ParamMap& params, int task_bound) {
  if (task_bound < 1) throw DomainError("task bound must be >= 1");
  const auto trips = trip_counts(kernel, params);
  const std::size_t par = kernel.parallel_loop();

  StaticFeatures f;
  f.loop_nest = static_cast<std::int64_t>(par) + 1;
  f.loop_count = trips[par];
  f.max_blocks = f.loop_count;
  f.min_task_unit = (f.loop_count + task_bound - 1) / task_bound;
  f.xfer_mem_count = static_cast<std::int64_t>(kernel.transfers.size());

  std::int64_t ghost_element_bytes = 0;
  for (const auto& name : kernel.transfers) {
    const ArraySpec& a = kernel.array(name);
    f.dts_bytes = checked_add(f.dts_bytes, array_bytes(kernel, a, params));
    if (a.host_to_device()) ghost_element_bytes = checked_add(ghost_element_bytes, a.element_bytes);
  }
  f.redundant_transfer_bytes =
      checked_mul(checked_mul(kernel.ghost_elements, ghost_element_bytes), f.max_blocks - 1);

  std::int64_t total = kernel.instruction_count;
  for (auto t : trips) total = checked_mul(total, t);
  f.instruction_total = total;
  return f;
}

}  // namespace streamtune
