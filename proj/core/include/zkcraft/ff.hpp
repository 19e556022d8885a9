#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace zkcraft {

enum class Errc {
  kModulusMismatch,
  kDivisionByZero,
  kDuplicateNode,
  kSchemaError,
  kInvariantError,
  kMagicMismatch,
  kTruncatedSection,
  kUnsupportedVersion,
  kShapeMismatch,
  kIndexOutOfRange,
  kEmptyInstance,
  kFieldTooSmall,
  kSingularMatrix,
  kDegreeBudgetExceeded,
  kDomainTooSmall,
  kPointOutsideDomain,
  kProverStatementFalse,
  kNonBooleanDelta,
  kDegreeOverflow,
  kNoSolution,
  kDegreeTooHigh,
  kUnknownSite,
  kReparseFailure,
  kIoError,
  kBudgetExhausted,
  kRejectedProof,
  kProofMalformed,
  kUnderdeterminedTrace,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

/// A prime modulus. Instances are interned and live for the whole process, so
/// FieldElement can hold a plain pointer and compare moduli by identity.
class FieldModulus {
 public:
  /// Interns q (primality-checked, q >= 3). Returns the canonical instance.
  static const FieldModulus* create(const mpz_class& q, std::string name = "");
  static const FieldModulus* from_decimal(const std::string& decimal);
  /// Named presets: "test101" (q = 101) and "bn254scalar" (254-bit scalar prime).
  static const FieldModulus* preset(std::string_view name);

  const mpz_class& value() const { return q_; }
  const std::string& name() const { return name_; }
  bool fits_u64() const { return fits_u64_; }
  std::uint64_t as_u64() const { return q_u64_; }
  std::size_t bit_length() const { return mpz_sizeinbase(q_.get_mpz_t(), 2); }

 private:
  FieldModulus(mpz_class q, std::string name);

  mpz_class q_;
  std::string name_;
  bool fits_u64_ = false;
  std::uint64_t q_u64_ = 0;
};

enum class FieldOp { kAdd, kSub, kMul, kInv, kNeg };

/// Canonical element of F_q: 0 <= value < q. Mixing moduli throws.
class FieldElement {
 public:
  FieldElement() = default;
  FieldElement(mpz_class v, const FieldModulus* q);

  static FieldElement zero(const FieldModulus* q) { return FieldElement(0, q); }
  static FieldElement one(const FieldModulus* q) { return FieldElement(1, q); }
  static FieldElement from_u64(std::uint64_t v, const FieldModulus* q);
  static FieldElement from_decimal(const std::string& dec, const FieldModulus* q);
  /// Interprets a big-endian byte string as an integer and reduces mod q.
  static FieldElement from_bytes_be(const std::uint8_t* data, std::size_t len,
                                    const FieldModulus* q);

  const mpz_class& value() const { return v_; }
  const FieldModulus* modulus() const { return q_; }
  bool is_zero() const { return v_ == 0; }
  bool is_one() const { return v_ == 1; }
  std::string to_decimal() const { return v_.get_str(); }
  std::uint64_t as_u64() const;

  FieldElement operator+(const FieldElement& o) const;
  FieldElement operator-(const FieldElement& o) const;
  FieldElement operator*(const FieldElement& o) const;
  FieldElement operator-() const;
  FieldElement inv() const;
  FieldElement pow(const mpz_class& e) const;

  FieldElement& operator+=(const FieldElement& o) { return *this = *this + o; }
  FieldElement& operator-=(const FieldElement& o) { return *this = *this - o; }
  FieldElement& operator*=(const FieldElement& o) { return *this = *this * o; }

  bool operator==(const FieldElement& o) const;
  bool operator!=(const FieldElement& o) const { return !(*this == o); }

  /// Canonical serialization: LE32 byte-count prefix, then minimal big-endian
  /// magnitude bytes (empty for zero).
  void append_bytes(std::vector<std::uint8_t>& out) const;
  std::vector<std::uint8_t> to_bytes() const;

 private:
  void check_same(const FieldElement& o) const;

  mpz_class v_;
  const FieldModulus* q_ = nullptr;
};

FieldElement field_arith(const FieldElement& a, const FieldElement& b, FieldOp op);

/// Square root in F_q (Tonelli-Shanks); nullopt when a is a non-residue.
std::optional<FieldElement> sqrt_mod(const FieldElement& a);

/// Dense univariate polynomial. Coefficient i multiplies X^i. Trailing zero
/// coefficients are trimmed; the zero polynomial has an empty coefficient
/// vector and degree() == -1.
class DensePoly {
 public:
  DensePoly() = default;
  explicit DensePoly(const FieldModulus* q) : q_(q) {}
  DensePoly(std::vector<FieldElement> coeffs, const FieldModulus* q);

  static DensePoly zero(const FieldModulus* q) { return DensePoly(q); }
  static DensePoly constant(const FieldElement& c);
  /// c1*X + c0
  static DensePoly linear(const FieldElement& c0, const FieldElement& c1);

  const std::vector<FieldElement>& coeffs() const { return coeffs_; }
  const FieldModulus* modulus() const { return q_; }
  bool is_zero() const { return coeffs_.empty(); }
  /// -1 for the zero polynomial.
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  FieldElement coeff(std::size_t i) const;

  FieldElement eval(const FieldElement& x) const;

  DensePoly operator+(const DensePoly& o) const;
  DensePoly operator-(const DensePoly& o) const;
  DensePoly operator*(const DensePoly& o) const;
  DensePoly scale(const FieldElement& s) const;

  bool operator==(const DensePoly& o) const;
  bool operator!=(const DensePoly& o) const { return !(*this == o); }

 private:
  void trim();

  std::vector<FieldElement> coeffs_;
  const FieldModulus* q_ = nullptr;
};

FieldElement poly_eval(const DensePoly& p, const FieldElement& x);

/// Unique polynomial of degree < |points| through the given points.
/// Throws DuplicateNode when two x coordinates coincide.
DensePoly lagrange_interpolate(const std::vector<std::pair<FieldElement, FieldElement>>& points);

using Matrix = std::vector<std::vector<FieldElement>>;

struct LinearSolveResult {
  enum class Kind { kUnique, kUnderdetermined, kInconsistent };
  Kind kind = Kind::kInconsistent;
  /// Particular solution (free variables set to zero). Valid unless inconsistent.
  std::vector<FieldElement> solution;
  /// Column indices without a pivot.
  std::vector<std::size_t> free_columns;
  /// Nullspace basis, one vector per free column.
  std::vector<std::vector<FieldElement>> nullspace;
};

/// Gaussian elimination over F_q with pivoting by first nonzero entry.
LinearSolveResult solve_linear(const Matrix& m, const std::vector<FieldElement>& rhs);

std::vector<FieldElement> mat_vec(const Matrix& m, const std::vector<FieldElement>& v);
Matrix mat_mul(const Matrix& a, const Matrix& b);
/// Throws SingularMatrix when not invertible.
Matrix mat_inverse(const Matrix& m);
Matrix identity_matrix(std::size_t n, const FieldModulus* q);

}  // namespace zkcraft
