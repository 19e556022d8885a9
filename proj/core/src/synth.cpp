#include "zkcraft/synth.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace zkcraft {

namespace {

// --- tokenizer ---

struct Token {
  enum class Kind { kName, kNumber, kPunct, kEnd };
  Kind kind = Kind::kEnd;
  std::string text;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token peek() {
    if (!has_peek_) {
      peeked_ = lex();
      has_peek_ = true;
    }
    return peeked_;
  }
  Token next() {
    Token t = peek();
    has_peek_ = false;
    return t;
  }

 private:
  Token lex() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
        continue;
      }
      break;
    }
    if (pos_ >= src_.size()) return {Token::Kind::kEnd, ""};
    char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        ++pos_;
      }
      return {Token::Kind::kNumber, std::string(src_.substr(start, pos_ - start))};
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$') {
      std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '_' || src_[pos_] == '$')) {
        ++pos_;
      }
      return {Token::Kind::kName, std::string(src_.substr(start, pos_ - start))};
    }
    // multi-char operators first
    for (const char* op : {"<==", "==="}) {
      if (src_.substr(pos_).rfind(op, 0) == 0) {
        pos_ += 3;
        return {Token::Kind::kPunct, op};
      }
    }
    ++pos_;
    return {Token::Kind::kPunct, std::string(1, c)};
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  Token peeked_;
  bool has_peek_ = false;
};

[[noreturn]] void parse_fail(const std::string& msg) {
  throw Error(Errc::kReparseFailure, "circom-subset parse: " + msg);
}

// expr := term (('+' | '-') term)*
// term := factor ('*' factor)*
// factor := NUMBER | NAME | '-' factor | '(' expr ')'
ExprPtr parse_expr(Lexer& lx);

ExprPtr parse_factor(Lexer& lx) {
  Token t = lx.next();
  if (t.kind == Token::Kind::kNumber) {
    auto e = std::make_unique<Expr>();
    e->kind = Expr::Kind::kLiteral;
    e->literal = mpz_class(t.text);
    return e;
  }
  if (t.kind == Token::Kind::kName) {
    auto e = std::make_unique<Expr>();
    e->kind = Expr::Kind::kName;
    e->name = t.text;
    return e;
  }
  if (t.kind == Token::Kind::kPunct && t.text == "-") {
    auto e = std::make_unique<Expr>();
    e->kind = Expr::Kind::kNeg;
    e->lhs = parse_factor(lx);
    return e;
  }
  if (t.kind == Token::Kind::kPunct && t.text == "(") {
    ExprPtr inner = parse_expr(lx);
    Token close = lx.next();
    if (close.kind != Token::Kind::kPunct || close.text != ")") {
      parse_fail("expected ')'");
    }
    return inner;
  }
  parse_fail("unexpected token '" + t.text + "' in expression");
}

ExprPtr parse_term(Lexer& lx) {
  ExprPtr lhs = parse_factor(lx);
  while (true) {
    Token t = lx.peek();
    if (t.kind == Token::Kind::kPunct && t.text == "*") {
      lx.next();
      auto e = std::make_unique<Expr>();
      e->kind = Expr::Kind::kMul;
      e->lhs = std::move(lhs);
      e->rhs = parse_factor(lx);
      lhs = std::move(e);
    } else {
      return lhs;
    }
  }
}

ExprPtr parse_expr(Lexer& lx) {
  ExprPtr lhs = parse_term(lx);
  while (true) {
    Token t = lx.peek();
    if (t.kind == Token::Kind::kPunct && (t.text == "+" || t.text == "-")) {
      lx.next();
      auto e = std::make_unique<Expr>();
      e->kind = t.text == "+" ? Expr::Kind::kAdd : Expr::Kind::kSub;
      e->lhs = std::move(lhs);
      e->rhs = parse_term(lx);
      lhs = std::move(e);
    } else {
      return lhs;
    }
  }
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) lines.push_back(cur);
  return lines;
}

}  // namespace

ExprPtr parse_expression(const std::string& text) {
  Lexer lx(text);
  ExprPtr e = parse_expr(lx);
  if (lx.peek().kind != Token::Kind::kEnd) {
    parse_fail("trailing tokens after expression");
  }
  return e;
}

Program parse_program(const std::string& text) {
  Program prog;
  prog.lines = split_lines(text);
  for (std::size_t ln = 0; ln < prog.lines.size(); ++ln) {
    std::string line = prog.lines[ln];
    // strip comments and whitespace
    std::size_t slash = line.find("//");
    if (slash != std::string::npos) line = line.substr(0, slash);
    bool blank = true;
    for (char c : line) {
      if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
    }
    if (blank) continue;

    Lexer lx(line);
    Token first = lx.next();
    if (first.kind == Token::Kind::kName && first.text == "signal") {
      Statement st;
      st.kind = Statement::Kind::kSignal;
      st.line = ln;
      Token t = lx.next();
      if (t.kind == Token::Kind::kName && t.text == "private") {
        st.signal.is_private = true;
        t = lx.next();
      }
      if (t.kind == Token::Kind::kName && t.text == "input") {
        st.signal.is_input = true;
        t = lx.next();
      } else if (t.kind == Token::Kind::kName && t.text == "output") {
        st.signal.is_output = true;
        t = lx.next();
      }
      if (t.kind != Token::Kind::kName) parse_fail("expected signal name");
      st.signal.name = t.text;
      Token semi = lx.next();
      if (semi.text != ";") parse_fail("expected ';' after signal declaration");
      prog.statements.push_back(std::move(st));
      continue;
    }
    if (first.kind != Token::Kind::kName) {
      parse_fail("statement must start with a name (line " + std::to_string(ln + 1) +
                 ")");
    }
    Token op = lx.next();
    if (op.kind != Token::Kind::kPunct || (op.text != "<==" && op.text != "===")) {
      parse_fail("expected '<==' or '===' (line " + std::to_string(ln + 1) + ")");
    }
    Statement st;
    st.kind = op.text == "<==" ? Statement::Kind::kWeakAssign
                               : Statement::Kind::kStrongConstraint;
    st.lhs = first.text;
    st.line = ln;
    st.rhs = parse_expr(lx);
    Token semi = lx.next();
    if (semi.text != ";") parse_fail("expected ';' (line " + std::to_string(ln + 1) + ")");
    if (lx.peek().kind != Token::Kind::kEnd) {
      parse_fail("one statement per line (line " + std::to_string(ln + 1) + ")");
    }
    prog.statements.push_back(std::move(st));
  }
  return prog;
}

FieldElement eval_expression(const Expr& e, const FieldModulus* q,
                             const std::map<std::string, FieldElement>& env) {
  switch (e.kind) {
    case Expr::Kind::kLiteral: return FieldElement(e.literal, q);
    case Expr::Kind::kName: {
      auto it = env.find(e.name);
      if (it == env.end()) {
        throw Error(Errc::kUnknownSite, "unresolved name '" + e.name + "'");
      }
      return it->second;
    }
    case Expr::Kind::kAdd:
      return eval_expression(*e.lhs, q, env) + eval_expression(*e.rhs, q, env);
    case Expr::Kind::kSub:
      return eval_expression(*e.lhs, q, env) - eval_expression(*e.rhs, q, env);
    case Expr::Kind::kMul:
      return eval_expression(*e.lhs, q, env) * eval_expression(*e.rhs, q, env);
    case Expr::Kind::kNeg: return -eval_expression(*e.lhs, q, env);
  }
  throw Error(Errc::kInvariantError, "bad expression node");
}

ProgramRun run_program(const Program& p, const FieldModulus* q,
                       const std::map<std::string, FieldElement>& inputs) {
  ProgramRun run;
  run.env = inputs;
  std::vector<std::string> output_names;
  for (const auto& st : p.statements) {
    if (st.kind == Statement::Kind::kSignal) {
      if (st.signal.is_output) output_names.push_back(st.signal.name);
      if (st.signal.is_input && !run.env.count(st.signal.name)) {
        throw Error(Errc::kShapeMismatch,
                    "missing input '" + st.signal.name + "'");
      }
      continue;
    }
    if (st.kind == Statement::Kind::kWeakAssign) {
      run.env[st.lhs] = eval_expression(*st.rhs, q, run.env);
      continue;
    }
    // strong constraint
    auto it = run.env.find(st.lhs);
    if (it == run.env.end()) {
      throw Error(Errc::kUnknownSite, "constraint on undefined '" + st.lhs + "'");
    }
    if (it->second != eval_expression(*st.rhs, q, run.env)) {
      run.constraint_violated = true;
      run.violated_line = st.line;
      return run;
    }
  }
  for (const auto& name : output_names) {
    auto it = run.env.find(name);
    if (it == run.env.end()) {
      throw Error(Errc::kUnknownSite, "output '" + name + "' never assigned");
    }
    run.outputs.push_back(it->second);
  }
  return run;
}

SiteRoots solve_site_constant(const SiteEquation& eq) {
  SiteRoots out;
  if (eq.degree <= 1) {
    const FieldModulus* q = eq.alpha.modulus();
    if (eq.alpha.is_zero()) {
      if (eq.beta.is_zero()) {
        out.all_of_field = true;
      }
      // alpha = 0, beta != 0: contradiction, no roots.
      return out;
    }
    out.roots.push_back(-(eq.alpha.inv() * eq.beta));
    (void)q;
    return out;
  }

  if (eq.degree > 4 || eq.poly_coeffs.size() != eq.degree + 1) {
    throw Error(Errc::kDegreeTooHigh,
                "site equation degree " + std::to_string(eq.degree) +
                    " beyond the practical threshold");
  }
  const FieldModulus* q = eq.poly_coeffs[0].modulus();
  DensePoly p(eq.poly_coeffs, q);
  if (p.is_zero()) {
    out.all_of_field = true;
    return out;
  }
  if (p.degree() == 2) {
    // a c^2 + b c + k = 0 via the quadratic formula.
    FieldElement a = p.coeff(2), b = p.coeff(1), k = p.coeff(0);
    if (a.is_zero()) {
      SiteEquation affine{eq.site_id, b, k, {}, 1};
      return solve_site_constant(affine);
    }
    FieldElement four = FieldElement::from_u64(4, q);
    FieldElement disc = b * b - four * a * k;
    auto root = sqrt_mod(disc);
    if (!root) return out;  // non-residue: no roots
    FieldElement inv2a = (FieldElement::from_u64(2, q) * a).inv();
    FieldElement r1 = (-b + *root) * inv2a;
    FieldElement r2 = (-b - *root) * inv2a;
    out.roots.push_back(r1);
    if (r2 != r1) out.roots.push_back(r2);
    std::sort(out.roots.begin(), out.roots.end(),
              [](const FieldElement& x, const FieldElement& y) {
                return x.value() < y.value();
              });
    return out;
  }
  // Degree 3..4: exhaustive scan, only tractable on small fields.
  if (!q->fits_u64() || q->as_u64() > (1u << 16)) {
    throw Error(Errc::kDegreeTooHigh,
                "degree " + std::to_string(p.degree()) +
                    " root scan needs q <= 2^16");
  }
  for (std::uint64_t v = 0; v < q->as_u64(); ++v) {
    FieldElement c = FieldElement::from_u64(v, q);
    if (p.eval(c).is_zero()) out.roots.push_back(c);
  }
  return out;
}

MutatedProgram emit_mutated_source(const std::string& original,
                                   const std::map<std::string, FieldElement>& subs) {
  Program prog = parse_program(original);

  // Map site id (last dot component) to the weak-assignment statement line.
  std::map<std::string, std::size_t> weak_line_of;
  for (const auto& st : prog.statements) {
    if (st.kind == Statement::Kind::kWeakAssign) {
      weak_line_of[st.lhs] = st.line;
    }
  }

  MutatedProgram out;
  std::vector<std::string> lines = prog.lines;
  for (const auto& [site_id, value] : subs) {
    std::string name = site_id;
    std::size_t dot = name.rfind('.');
    if (dot != std::string::npos) name = name.substr(dot + 1);
    auto it = weak_line_of.find(name);
    if (it == weak_line_of.end()) {
      throw Error(Errc::kUnknownSite,
                  "site '" + site_id + "' has no weak assignment in the source");
    }
    std::string& line = lines[it->second];
    std::size_t op = line.find("<==");
    std::size_t semi = line.rfind(';');
    if (op == std::string::npos || semi == std::string::npos || semi < op) {
      throw Error(Errc::kUnknownSite, "weak assignment line malformed");
    }
    std::string literal = value.to_decimal();
    line = line.substr(0, op + 3) + " " + literal + line.substr(semi);
    out.substitutions[site_id] = literal;
  }

  std::ostringstream os;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    os << lines[i];
    os << '\n';
  }
  out.source_text = os.str();
  // The emitted text must re-parse under the same grammar.
  try {
    (void)parse_program(out.source_text);
  } catch (const Error&) {
    throw Error(Errc::kReparseFailure, "mutated source does not re-parse");
  }
  return out;
}

namespace {

void emit_linear_combination(std::ostringstream& os, const SparseVec& v) {
  if (v.empty()) {
    os << "0";
    return;
  }
  os << "(+";
  for (const auto& t : v) {
    os << " (* " << t.coeff.to_decimal() << " w" << t.index << ")";
  }
  os << ")";
}

}  // namespace

std::string smtlib_emit(const R1csInstance& inst, const CandidatePool& pool,
                        std::uint32_t t_cardinality,
                        const std::vector<FieldElement>& y_orig) {
  if (t_cardinality > pool.rows.size()) {
    throw Error(Errc::kInvariantError, "cardinality exceeds pool size");
  }
  std::ostringstream os;
  const std::string qs = inst.modulus()->value().get_str();
  os << "(set-logic QF_NIA)\n";
  os << "(set-info :source |zkcraft edited-system query, cardinality "
     << t_cardinality << "|)\n";
  os << "; field F_q with q = " << qs << "; residues encoded as bounded Ints\n";

  for (std::uint32_t i = 0; i < inst.num_vars(); ++i) {
    os << "(declare-const w" << i << " Int)\n";
    os << "(assert (and (<= 0 w" << i << ") (< w" << i << " " << qs << ")))\n";
  }
  os << "(assert (= w0 1))\n";

  for (std::size_t i = 0; i < pool.rows.size(); ++i) {
    os << "(declare-const d" << i << " Int)\n";
    os << "(assert (or (= d" << i << " 0) (= d" << i << " 1)))\n";
    os << "(declare-const c" << i << " Int)\n";
    os << "(assert (and (<= 0 c" << i << ") (< c" << i << " " << qs << ")))\n";
  }

  // Per-row congruence with explicit slack multiples of q. Rows in the pool
  // switch between the original relation and the substituted one.
  std::map<std::uint32_t, std::size_t> pool_pos;
  for (std::size_t i = 0; i < pool.rows.size(); ++i) pool_pos[pool.rows[i]] = i;
  for (std::uint32_t r = 0; r < inst.num_constraints(); ++r) {
    const ConstraintRow& row = inst.rows()[r];
    os << "(declare-const m" << r << " Int)\n";
    std::ostringstream orig;
    orig << "(= (- (* ";
    emit_linear_combination(orig, row.a);
    orig << " ";
    emit_linear_combination(orig, row.b);
    orig << ") ";
    emit_linear_combination(orig, row.c);
    orig << ") (* m" << r << " " << qs << "))";

    auto it = pool_pos.find(r);
    if (it != pool_pos.end() && inst.row_is_weak(r) && inst.site_var(r) >= 0) {
      std::ostringstream edited;
      edited << "(= w" << inst.site_var(r) << " c" << it->second << ")";
      os << "(assert (ite (= d" << it->second << " 1) " << edited.str() << " "
         << orig.str() << "))\n";
    } else {
      os << "(assert " << orig.str() << ")\n";
      if (it != pool_pos.end()) {
        os << "(assert (= d" << it->second << " 0))\n";
      }
    }
  }

  os << "(assert (= (+";
  for (std::size_t i = 0; i < pool.rows.size(); ++i) os << " d" << i;
  os << " 0) " << t_cardinality << "))\n";

  std::vector<std::uint32_t> outs = inst.public_output_indices();
  if (outs.size() != y_orig.size()) {
    throw Error(Errc::kShapeMismatch, "y_orig length");
  }
  if (!outs.empty()) {
    os << "(assert (or";
    for (std::size_t j = 0; j < outs.size(); ++j) {
      os << " (distinct w" << outs[j] << " " << y_orig[j].to_decimal() << ")";
    }
    os << "))\n";
  }
  os << "(check-sat)\n(get-model)\n";
  return os.str();
}

std::vector<Sexpr> sexpr_parse(const std::string& text) {
  std::vector<Sexpr> out;
  std::size_t pos = 0;
  auto skip_ws = [&]() {
    while (pos < text.size()) {
      char c = text[pos];
      if (c == ';') {
        while (pos < text.size() && text[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  std::function<Sexpr()> parse_one = [&]() -> Sexpr {
    skip_ws();
    if (pos >= text.size()) throw Error(Errc::kReparseFailure, "unexpected end");
    char c = text[pos];
    Sexpr s;
    if (c == '(') {
      ++pos;
      while (true) {
        skip_ws();
        if (pos >= text.size()) {
          throw Error(Errc::kReparseFailure, "unterminated list");
        }
        if (text[pos] == ')') {
          ++pos;
          return s;
        }
        s.items.push_back(parse_one());
      }
    }
    if (c == ')') throw Error(Errc::kReparseFailure, "unbalanced ')'");
    if (c == '|') {
      std::size_t end = text.find('|', pos + 1);
      if (end == std::string::npos) {
        throw Error(Errc::kReparseFailure, "unterminated |symbol|");
      }
      s.is_atom = true;
      s.atom = text.substr(pos, end - pos + 1);
      pos = end + 1;
      return s;
    }
    std::size_t start = pos;
    while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])) &&
           text[pos] != '(' && text[pos] != ')') {
      ++pos;
    }
    s.is_atom = true;
    s.atom = text.substr(start, pos - start);
    return s;
  };
  while (true) {
    skip_ws();
    if (pos >= text.size()) break;
    out.push_back(parse_one());
  }
  if (out.empty()) throw Error(Errc::kReparseFailure, "no expressions");
  return out;
}

}  // namespace zkcraft
