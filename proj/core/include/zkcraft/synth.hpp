#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "zkcraft/circuit.hpp"
#include "zkcraft/ff.hpp"
#include "zkcraft/slicer.hpp"

namespace zkcraft {

// --- Circom-subset front end ---
//
// Grammar:
//   signal (private)? (input|output)? NAME ;
//   NAME <== EXPR ;        (weak assignment, the mutation surface)
//   NAME === EXPR ;        (strong constraint)
//   EXPR: integer literals, names, +, -, *, unary -, parentheses.

struct Expr {
  enum class Kind { kLiteral, kName, kAdd, kSub, kMul, kNeg };
  Kind kind;
  mpz_class literal;
  std::string name;
  std::unique_ptr<Expr> lhs, rhs;
};

using ExprPtr = std::unique_ptr<Expr>;

struct SignalDecl {
  std::string name;
  bool is_private = false;
  bool is_input = false;
  bool is_output = false;
};

struct Statement {
  enum class Kind { kSignal, kWeakAssign, kStrongConstraint };
  Kind kind;
  SignalDecl signal;
  std::string lhs;
  ExprPtr rhs;
  std::size_t line = 0;  // 0-based line in the source text
};

struct Program {
  std::vector<Statement> statements;
  std::vector<std::string> lines;  // original text, for byte-stable emission
};

Program parse_program(const std::string& text);
/// Expression-only entry point (template validation).
ExprPtr parse_expression(const std::string& text);

FieldElement eval_expression(const Expr& e, const FieldModulus* q,
                             const std::map<std::string, FieldElement>& env);

struct ProgramRun {
  std::map<std::string, FieldElement> env;
  std::vector<FieldElement> outputs;  // declaration order
  bool constraint_violated = false;
  std::size_t violated_line = 0;
};

/// Executes weak assignments in order and checks strong constraints.
ProgramRun run_program(const Program& p, const FieldModulus* q,
                       const std::map<std::string, FieldElement>& inputs);

// --- Stage-3 site equations ---

struct SiteEquation {
  std::string site_id;
  /// Affine case alpha * c + beta = 0; degree 2..4 carries poly_coeffs
  /// (index i = coefficient of c^i) and ignores alpha/beta.
  FieldElement alpha, beta;
  std::vector<FieldElement> poly_coeffs;
  std::uint32_t degree = 1;
};

struct SiteRoots {
  std::vector<FieldElement> roots;
  /// alpha = beta = 0: every field element satisfies the equation. Reported,
  /// never enumerated.
  bool all_of_field = false;
};

/// Affine: the single root -alpha^{-1} beta. Degree 2 over any field via the
/// quadratic formula; degree 3..4 by exhaustive scan for q <= 2^16. Higher
/// degrees (or 3..4 over large fields) throw DegreeTooHigh, which triggers
/// the fallback reconstruction upstream.
SiteRoots solve_site_constant(const SiteEquation& eq);

struct MutatedProgram {
  std::string source_text;
  std::map<std::string, std::string> substitutions;  // site_id -> RHS literal
};

/// Replaces only the targeted weak-assignment right-hand sides with decimal
/// literals. site ids resolve by their last dot component ("main.c" -> "c").
MutatedProgram emit_mutated_source(const std::string& original,
                                   const std::map<std::string, FieldElement>& subs);

/// Quantifier-free SMT-LIB2 encoding of: exists (delta, c, w') with
/// F_edited(w') = 0, y' != y, sum(delta) = t_cardinality. Emitted as text
/// only; never executed here.
std::string smtlib_emit(const R1csInstance& inst, const CandidatePool& pool,
                        std::uint32_t t_cardinality,
                        const std::vector<FieldElement>& y_orig);

// Minimal S-expression reader used as the syntax oracle for emitted queries.
struct Sexpr {
  bool is_atom = false;
  std::string atom;
  std::vector<Sexpr> items;
};

/// Parses a sequence of top-level S-expressions; throws ReparseFailure on
/// malformed input.
std::vector<Sexpr> sexpr_parse(const std::string& text);

}  // namespace zkcraft
