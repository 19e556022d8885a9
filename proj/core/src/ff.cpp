#include "zkcraft/ff.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>

namespace zkcraft {

namespace {

// BN254 / alt_bn128 scalar-field prime.
constexpr const char* kBn254ScalarDecimal =
    "21888242871839275222246405745257275088548364400416034343698204186575808495617";

struct ModulusRegistry {
  std::mutex mu;
  std::map<mpz_class, std::unique_ptr<FieldModulus>> by_value;
};

ModulusRegistry& registry() {
  static ModulusRegistry* r = new ModulusRegistry();
  return *r;
}

}  // namespace

FieldModulus::FieldModulus(mpz_class q, std::string name)
    : q_(std::move(q)), name_(std::move(name)) {
  fits_u64_ = q_.fits_ulong_p() || mpz_sizeinbase(q_.get_mpz_t(), 2) <= 63;
  if (fits_u64_) q_u64_ = mpz_get_ui(q_.get_mpz_t());
}

const FieldModulus* FieldModulus::create(const mpz_class& q, std::string name) {
  if (q < 3) throw Error(Errc::kInvariantError, "modulus must be >= 3");
  if (mpz_probab_prime_p(q.get_mpz_t(), 25) == 0) {
    throw Error(Errc::kInvariantError, "modulus is not prime: " + q.get_str());
  }
  auto& reg = registry();
  std::lock_guard<std::mutex> lock(reg.mu);
  auto it = reg.by_value.find(q);
  if (it != reg.by_value.end()) return it->second.get();
  auto owned = std::unique_ptr<FieldModulus>(new FieldModulus(q, std::move(name)));
  const FieldModulus* ptr = owned.get();
  reg.by_value.emplace(q, std::move(owned));
  return ptr;
}

const FieldModulus* FieldModulus::from_decimal(const std::string& decimal) {
  mpz_class q;
  if (q.set_str(decimal, 10) != 0) {
    throw Error(Errc::kSchemaError, "bad decimal modulus: " + decimal);
  }
  return create(q);
}

const FieldModulus* FieldModulus::preset(std::string_view name) {
  if (name == "test101") return create(mpz_class(101), "test101");
  if (name == "bn254scalar") {
    return create(mpz_class(kBn254ScalarDecimal), "bn254scalar");
  }
  throw Error(Errc::kSchemaError, "unknown field preset: " + std::string(name));
}

FieldElement::FieldElement(mpz_class v, const FieldModulus* q) : v_(std::move(v)), q_(q) {
  if (q_ == nullptr) throw Error(Errc::kInvariantError, "null modulus");
  mpz_mod(v_.get_mpz_t(), v_.get_mpz_t(), q_->value().get_mpz_t());
}

FieldElement FieldElement::from_u64(std::uint64_t v, const FieldModulus* q) {
  mpz_class x;
  mpz_import(x.get_mpz_t(), 1, 1, sizeof(v), 0, 0, &v);
  return FieldElement(x, q);
}

FieldElement FieldElement::from_decimal(const std::string& dec, const FieldModulus* q) {
  mpz_class x;
  if (x.set_str(dec, 10) != 0) {
    throw Error(Errc::kSchemaError, "bad decimal field element: " + dec);
  }
  return FieldElement(x, q);
}

FieldElement FieldElement::from_bytes_be(const std::uint8_t* data, std::size_t len,
                                         const FieldModulus* q) {
  mpz_class x;
  if (len > 0) mpz_import(x.get_mpz_t(), len, 1, 1, 0, 0, data);
  return FieldElement(x, q);
}

std::uint64_t FieldElement::as_u64() const {
  if (!v_.fits_ulong_p() && mpz_sizeinbase(v_.get_mpz_t(), 2) > 64) {
    throw Error(Errc::kInvariantError, "element does not fit u64");
  }
  std::uint64_t out = 0;
  std::size_t count = 0;
  mpz_export(&out, &count, -1, sizeof(out), 0, 0, v_.get_mpz_t());
  return out;
}

void FieldElement::check_same(const FieldElement& o) const {
  if (q_ == nullptr || o.q_ == nullptr) {
    throw Error(Errc::kModulusMismatch, "operation on element without modulus");
  }
  if (q_ != o.q_) {
    throw Error(Errc::kModulusMismatch, "operands belong to different fields");
  }
}

FieldElement FieldElement::operator+(const FieldElement& o) const {
  check_same(o);
  mpz_class r = v_ + o.v_;
  if (r >= q_->value()) r -= q_->value();
  FieldElement out;
  out.v_ = std::move(r);
  out.q_ = q_;
  return out;
}

FieldElement FieldElement::operator-(const FieldElement& o) const {
  check_same(o);
  mpz_class r = v_ - o.v_;
  if (r < 0) r += q_->value();
  FieldElement out;
  out.v_ = std::move(r);
  out.q_ = q_;
  return out;
}

FieldElement FieldElement::operator*(const FieldElement& o) const {
  check_same(o);
  mpz_class r = v_ * o.v_;
  mpz_mod(r.get_mpz_t(), r.get_mpz_t(), q_->value().get_mpz_t());
  FieldElement out;
  out.v_ = std::move(r);
  out.q_ = q_;
  return out;
}

FieldElement FieldElement::operator-() const {
  if (q_ == nullptr) throw Error(Errc::kModulusMismatch, "negation without modulus");
  FieldElement out;
  out.q_ = q_;
  out.v_ = v_ == 0 ? mpz_class(0) : mpz_class(q_->value() - v_);
  return out;
}

FieldElement FieldElement::inv() const {
  if (q_ == nullptr) throw Error(Errc::kModulusMismatch, "inverse without modulus");
  if (v_ == 0) throw Error(Errc::kDivisionByZero, "inverse of zero");
  FieldElement out;
  out.q_ = q_;
  if (mpz_invert(out.v_.get_mpz_t(), v_.get_mpz_t(), q_->value().get_mpz_t()) == 0) {
    throw Error(Errc::kDivisionByZero, "non-invertible element");
  }
  return out;
}

FieldElement FieldElement::pow(const mpz_class& e) const {
  if (q_ == nullptr) throw Error(Errc::kModulusMismatch, "pow without modulus");
  FieldElement out;
  out.q_ = q_;
  mpz_powm(out.v_.get_mpz_t(), v_.get_mpz_t(), e.get_mpz_t(), q_->value().get_mpz_t());
  return out;
}

bool FieldElement::operator==(const FieldElement& o) const {
  if (q_ != o.q_) return false;
  return v_ == o.v_;
}

void FieldElement::append_bytes(std::vector<std::uint8_t>& out) const {
  std::size_t nbytes = v_ == 0 ? 0 : (mpz_sizeinbase(v_.get_mpz_t(), 2) + 7) / 8;
  out.push_back(std::uint8_t(nbytes));
  out.push_back(std::uint8_t(nbytes >> 8));
  out.push_back(std::uint8_t(nbytes >> 16));
  out.push_back(std::uint8_t(nbytes >> 24));
  if (nbytes > 0) {
    std::size_t old = out.size();
    out.resize(old + nbytes);
    std::size_t written = 0;
    mpz_export(out.data() + old, &written, 1, 1, 0, 0, v_.get_mpz_t());
  }
}

std::vector<std::uint8_t> FieldElement::to_bytes() const {
  std::vector<std::uint8_t> out;
  append_bytes(out);
  return out;
}

FieldElement field_arith(const FieldElement& a, const FieldElement& b, FieldOp op) {
  switch (op) {
    case FieldOp::kAdd: return a + b;
    case FieldOp::kSub: return a - b;
    case FieldOp::kMul: return a * b;
    case FieldOp::kNeg: return -a;
    case FieldOp::kInv: return a.inv();
  }
  throw Error(Errc::kInvariantError, "bad field op");
}

std::optional<FieldElement> sqrt_mod(const FieldElement& a) {
  const FieldModulus* q = a.modulus();
  const mpz_class& p = q->value();
  if (a.is_zero()) return FieldElement::zero(q);

  mpz_class leg;
  mpz_class e = (p - 1) / 2;
  mpz_powm(leg.get_mpz_t(), a.value().get_mpz_t(), e.get_mpz_t(), p.get_mpz_t());
  if (leg != 1) return std::nullopt;

  if (p % 4 == 3) {
    mpz_class exp = (p + 1) / 4;
    return a.pow(exp);
  }

  // Tonelli-Shanks: p - 1 = s * 2^r with s odd.
  mpz_class s = p - 1;
  unsigned long r = 0;
  while (mpz_even_p(s.get_mpz_t())) {
    s /= 2;
    ++r;
  }
  // Find a non-residue z by deterministic scan.
  FieldElement z = FieldElement::from_u64(2, q);
  while (true) {
    mpz_class l;
    mpz_powm(l.get_mpz_t(), z.value().get_mpz_t(), e.get_mpz_t(), p.get_mpz_t());
    if (l == p - 1) break;
    z = z + FieldElement::one(q);
  }

  FieldElement c = z.pow(s);
  FieldElement x = a.pow((s + 1) / 2);
  FieldElement t = a.pow(s);
  unsigned long m = r;
  while (!t.is_one()) {
    FieldElement t2 = t;
    unsigned long i = 0;
    while (!t2.is_one()) {
      t2 = t2 * t2;
      ++i;
      if (i == m) return std::nullopt;
    }
    mpz_class two_exp;
    mpz_ui_pow_ui(two_exp.get_mpz_t(), 2, m - i - 1);
    FieldElement b = c.pow(two_exp);
    x = x * b;
    c = b * b;
    t = t * c;
    m = i;
  }
  return x;
}

DensePoly::DensePoly(std::vector<FieldElement> coeffs, const FieldModulus* q)
    : coeffs_(std::move(coeffs)), q_(q) {
  for (const auto& c : coeffs_) {
    if (c.modulus() != q_) throw Error(Errc::kModulusMismatch, "polynomial coefficient field");
  }
  trim();
}

DensePoly DensePoly::constant(const FieldElement& c) {
  DensePoly p(c.modulus());
  if (!c.is_zero()) p.coeffs_ = {c};
  return p;
}

DensePoly DensePoly::linear(const FieldElement& c0, const FieldElement& c1) {
  DensePoly p({c0, c1}, c0.modulus());
  return p;
}

void DensePoly::trim() {
  while (!coeffs_.empty() && coeffs_.back().is_zero()) coeffs_.pop_back();
}

FieldElement DensePoly::coeff(std::size_t i) const {
  if (i < coeffs_.size()) return coeffs_[i];
  return FieldElement::zero(q_);
}

FieldElement DensePoly::eval(const FieldElement& x) const {
  if (x.modulus() != q_) throw Error(Errc::kModulusMismatch, "eval point field");
  FieldElement acc = FieldElement::zero(q_);
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) {
    acc = acc * x + *it;
  }
  return acc;
}

DensePoly DensePoly::operator+(const DensePoly& o) const {
  if (q_ != o.q_) throw Error(Errc::kModulusMismatch, "poly add");
  std::vector<FieldElement> out(std::max(coeffs_.size(), o.coeffs_.size()),
                                FieldElement::zero(q_));
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = coeff(i) + o.coeff(i);
  }
  return DensePoly(std::move(out), q_);
}

DensePoly DensePoly::operator-(const DensePoly& o) const {
  if (q_ != o.q_) throw Error(Errc::kModulusMismatch, "poly sub");
  std::vector<FieldElement> out(std::max(coeffs_.size(), o.coeffs_.size()),
                                FieldElement::zero(q_));
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = coeff(i) - o.coeff(i);
  }
  return DensePoly(std::move(out), q_);
}

DensePoly DensePoly::operator*(const DensePoly& o) const {
  if (q_ != o.q_) throw Error(Errc::kModulusMismatch, "poly mul");
  if (is_zero() || o.is_zero()) return DensePoly(q_);
  std::vector<FieldElement> out(coeffs_.size() + o.coeffs_.size() - 1,
                                FieldElement::zero(q_));
  for (std::size_t i = 0; i < coeffs_.size(); ++i) {
    if (coeffs_[i].is_zero()) continue;
    for (std::size_t j = 0; j < o.coeffs_.size(); ++j) {
      out[i + j] += coeffs_[i] * o.coeffs_[j];
    }
  }
  return DensePoly(std::move(out), q_);
}

DensePoly DensePoly::scale(const FieldElement& s) const {
  std::vector<FieldElement> out;
  out.reserve(coeffs_.size());
  for (const auto& c : coeffs_) out.push_back(c * s);
  return DensePoly(std::move(out), q_);
}

bool DensePoly::operator==(const DensePoly& o) const {
  return q_ == o.q_ && coeffs_ == o.coeffs_;
}

FieldElement poly_eval(const DensePoly& p, const FieldElement& x) { return p.eval(x); }

DensePoly lagrange_interpolate(
    const std::vector<std::pair<FieldElement, FieldElement>>& points) {
  if (points.empty()) throw Error(Errc::kInvariantError, "interpolation needs >= 1 point");
  const FieldModulus* q = points[0].first.modulus();
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      if (points[i].first == points[j].first) {
        throw Error(Errc::kDuplicateNode, "duplicate interpolation node");
      }
    }
  }

  DensePoly acc = DensePoly::zero(q);
  for (std::size_t i = 0; i < points.size(); ++i) {
    // Basis polynomial for node i, scaled by y_i.
    DensePoly basis = DensePoly::constant(FieldElement::one(q));
    FieldElement denom = FieldElement::one(q);
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (j == i) continue;
      basis = basis * DensePoly::linear(-points[j].first, FieldElement::one(q));
      denom *= points[i].first - points[j].first;
    }
    acc = acc + basis.scale(points[i].second * denom.inv());
  }
  return acc;
}

LinearSolveResult solve_linear(const Matrix& m, const std::vector<FieldElement>& rhs) {
  if (m.size() != rhs.size()) throw Error(Errc::kShapeMismatch, "solve_linear shape");
  std::size_t nrows = m.size();
  std::size_t ncols = nrows == 0 ? 0 : m[0].size();
  const FieldModulus* q = nullptr;
  if (nrows > 0 && ncols > 0) {
    q = m[0][0].modulus();
  } else if (!rhs.empty()) {
    q = rhs[0].modulus();
  }
  for (const auto& row : m) {
    if (row.size() != ncols) throw Error(Errc::kShapeMismatch, "ragged matrix");
  }

  // Augmented row-reduction.
  Matrix a = m;
  std::vector<FieldElement> b = rhs;
  std::vector<std::size_t> pivot_col_of_row;
  std::vector<bool> col_has_pivot(ncols, false);
  std::size_t row = 0;
  for (std::size_t col = 0; col < ncols && row < nrows; ++col) {
    std::size_t sel = row;
    while (sel < nrows && a[sel][col].is_zero()) ++sel;
    if (sel == nrows) continue;
    std::swap(a[sel], a[row]);
    std::swap(b[sel], b[row]);
    FieldElement inv = a[row][col].inv();
    for (std::size_t j = col; j < ncols; ++j) a[row][j] *= inv;
    b[row] *= inv;
    for (std::size_t r = 0; r < nrows; ++r) {
      if (r == row || a[r][col].is_zero()) continue;
      FieldElement f = a[r][col];
      for (std::size_t j = col; j < ncols; ++j) a[r][j] -= f * a[row][j];
      b[r] -= f * b[row];
    }
    pivot_col_of_row.push_back(col);
    col_has_pivot[col] = true;
    ++row;
  }

  LinearSolveResult res;
  // Inconsistency: a zero row with nonzero rhs.
  for (std::size_t r = row; r < nrows; ++r) {
    if (!b[r].is_zero()) {
      res.kind = LinearSolveResult::Kind::kInconsistent;
      return res;
    }
  }

  if (q == nullptr) {
    res.kind = LinearSolveResult::Kind::kUnique;
    return res;
  }

  res.solution.assign(ncols, FieldElement::zero(q));
  for (std::size_t r = 0; r < pivot_col_of_row.size(); ++r) {
    res.solution[pivot_col_of_row[r]] = b[r];
  }
  for (std::size_t c = 0; c < ncols; ++c) {
    if (!col_has_pivot[c]) res.free_columns.push_back(c);
  }
  if (res.free_columns.empty()) {
    res.kind = LinearSolveResult::Kind::kUnique;
  } else {
    res.kind = LinearSolveResult::Kind::kUnderdetermined;
    for (std::size_t fc : res.free_columns) {
      std::vector<FieldElement> basis(ncols, FieldElement::zero(q));
      basis[fc] = FieldElement::one(q);
      for (std::size_t r = 0; r < pivot_col_of_row.size(); ++r) {
        basis[pivot_col_of_row[r]] = -a[r][fc];
      }
      res.nullspace.push_back(std::move(basis));
    }
  }
  return res;
}

std::vector<FieldElement> mat_vec(const Matrix& m, const std::vector<FieldElement>& v) {
  if (v.empty()) throw Error(Errc::kShapeMismatch, "mat_vec on empty vector");
  std::vector<FieldElement> out;
  out.reserve(m.size());
  for (const auto& row : m) {
    if (row.size() != v.size()) throw Error(Errc::kShapeMismatch, "mat_vec shape");
    FieldElement acc = FieldElement::zero(v[0].modulus());
    for (std::size_t j = 0; j < row.size(); ++j) acc += row[j] * v[j];
    out.push_back(acc);
  }
  return out;
}

Matrix mat_mul(const Matrix& a, const Matrix& b) {
  if (a.empty() || b.empty()) return {};
  std::size_t n = a.size(), k = b.size(), m = b[0].size();
  const FieldModulus* q = b[0][0].modulus();
  Matrix out(n, std::vector<FieldElement>(m, FieldElement::zero(q)));
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i].size() != k) throw Error(Errc::kShapeMismatch, "mat_mul shape");
    for (std::size_t j = 0; j < k; ++j) {
      if (a[i][j].is_zero()) continue;
      for (std::size_t c = 0; c < m; ++c) out[i][c] += a[i][j] * b[j][c];
    }
  }
  return out;
}

Matrix identity_matrix(std::size_t n, const FieldModulus* q) {
  Matrix out(n, std::vector<FieldElement>(n, FieldElement::zero(q)));
  for (std::size_t i = 0; i < n; ++i) out[i][i] = FieldElement::one(q);
  return out;
}

Matrix mat_inverse(const Matrix& m) {
  std::size_t n = m.size();
  if (n == 0) return {};
  const FieldModulus* q = m[0][0].modulus();
  Matrix out(n, std::vector<FieldElement>(n, FieldElement::zero(q)));
  for (std::size_t col = 0; col < n; ++col) {
    std::vector<FieldElement> e(n, FieldElement::zero(q));
    e[col] = FieldElement::one(q);
    LinearSolveResult r = solve_linear(m, e);
    if (r.kind != LinearSolveResult::Kind::kUnique) {
      throw Error(Errc::kSingularMatrix, "matrix not invertible");
    }
    for (std::size_t row = 0; row < n; ++row) out[row][col] = r.solution[row];
  }
  return out;
}

}  // namespace zkcraft
