#include <doctest.h>

#include "support.hpp"
#include "zkcraft/ff.hpp"

using namespace zkcraft;
using zkcraft::test::Rng;

namespace {
const FieldModulus* q101() { return FieldModulus::preset("test101"); }
FieldElement fe(std::uint64_t v) { return FieldElement::from_u64(v, q101()); }
}  // namespace

TEST_CASE("modular arithmetic basics") {
  CHECK(field_arith(fe(50), fe(60), FieldOp::kAdd) == fe(9));
  CHECK(field_arith(fe(2), fe(0), FieldOp::kInv) == fe(51));
  // Brute-force oracle: scan x in 1..100 for 7x = 1 mod 101.
  std::uint64_t expect = 0;
  for (std::uint64_t x = 1; x < 101; ++x) {
    if ((7 * x) % 101 == 1) expect = x;
  }
  CHECK(expect == 29);
  CHECK(field_arith(fe(7), fe(0), FieldOp::kInv) == fe(29));
}

TEST_CASE("inverse errors") {
  CHECK_THROWS_AS((void)fe(0).inv(), Error);
  const FieldModulus* other = FieldModulus::create(mpz_class(103));
  CHECK_THROWS_AS((void)(fe(1) + FieldElement::from_u64(1, other)), Error);
}

TEST_CASE("non-prime modulus rejected") {
  CHECK_THROWS_AS((void)FieldModulus::create(mpz_class(100)), Error);
  CHECK_THROWS_AS((void)FieldModulus::create(mpz_class(1)), Error);
}

TEST_CASE("modulus interning dedupes") {
  CHECK(FieldModulus::create(mpz_class(101)) == q101());
  CHECK(FieldModulus::preset("bn254scalar") == FieldModulus::preset("bn254scalar"));
}

TEST_CASE("a * inv(a) == 1 over both preset fields") {
  Rng rng(0x11d5);
  for (const char* preset : {"test101", "bn254scalar"}) {
    const FieldModulus* q = FieldModulus::preset(preset);
    for (int i = 0; i < 200; ++i) {
      FieldElement a = rng.nonzero_element(q);
      CHECK(a * a.inv() == FieldElement::one(q));
    }
  }
}

TEST_CASE("poly eval golden values") {
  DensePoly p({fe(1), fe(1), fe(1)}, q101());  // X^2 + X + 1
  CHECK(p.eval(fe(1)) == fe(3));
  DensePoly p2({fe(1), fe(3), fe(2)}, q101());  // 2X^2 + 3X + 1
  CHECK(p2.eval(fe(1)) == fe(6));
  CHECK(DensePoly::zero(q101()).eval(fe(77)) == fe(0));
}

TEST_CASE("poly degree and trimming") {
  DensePoly z({fe(0), fe(0)}, q101());
  CHECK(z.degree() == -1);
  CHECK(z.is_zero());
  DensePoly a({fe(1), fe(2)}, q101());
  DensePoly b({fe(3)}, q101());
  CHECK((a * b).degree() == a.degree() + b.degree());
}

TEST_CASE("lagrange single point and line") {
  DensePoly c = lagrange_interpolate({{fe(1), fe(3)}});
  CHECK(c.degree() == 0);
  CHECK(c.coeff(0) == fe(3));

  DensePoly line = lagrange_interpolate({{fe(1), fe(2)}, {fe(2), fe(4)}});
  CHECK(line == DensePoly({fe(0), fe(2)}, q101()));  // 2X
}

TEST_CASE("lagrange duplicate node rejected") {
  CHECK_THROWS_AS(
      (void)lagrange_interpolate({{fe(1), fe(3)}, {fe(1), fe(4)}}), Error);
}

TEST_CASE("interpolate-evaluate roundtrip, 1000 random polynomials") {
  Rng rng(0xfeed);
  for (const char* preset : {"test101", "bn254scalar"}) {
    const FieldModulus* q = FieldModulus::preset(preset);
    for (int trial = 0; trial < 500; ++trial) {
      std::size_t deg = rng.below(6);
      std::vector<FieldElement> coeffs;
      for (std::size_t i = 0; i <= deg; ++i) coeffs.push_back(rng.element(q));
      DensePoly p(coeffs, q);
      std::vector<std::pair<FieldElement, FieldElement>> pts;
      for (std::size_t i = 0; i <= deg; ++i) {
        FieldElement x = FieldElement::from_u64(i * 3 + 1, q);
        pts.emplace_back(x, p.eval(x));
      }
      CHECK(lagrange_interpolate(pts) == p);
    }
  }
}

TEST_CASE("schwartz-zippel empirical frequency") {
  // Nonzero polynomials of degree r <= 10 over F_101 vanish at a uniform
  // point with frequency <= r/q plus three sigma.
  Rng rng(0x5a5a);
  const int trials = 100000;
  for (int r = 2; r <= 10; r += 4) {
    std::vector<FieldElement> coeffs;
    for (int i = 0; i < r; ++i) coeffs.push_back(rng.element(q101()));
    coeffs.push_back(rng.nonzero_element(q101()));
    DensePoly p(coeffs, q101());
    int zeros = 0;
    for (int i = 0; i < trials; ++i) {
      if (p.eval(rng.element(q101())).is_zero()) ++zeros;
    }
    double bound = double(r) / 101.0;
    double sigma = std::sqrt(bound * (1 - bound) / trials);
    CHECK(double(zeros) / trials <= bound + 3 * sigma);
  }
}

TEST_CASE("solve_linear identity") {
  Matrix m = identity_matrix(3, q101());
  std::vector<FieldElement> rhs = {fe(5), fe(7), fe(11)};
  LinearSolveResult r = solve_linear(m, rhs);
  CHECK(r.kind == LinearSolveResult::Kind::kUnique);
  CHECK(r.solution == rhs);
}

TEST_CASE("solve_linear vandermonde matches interpolation") {
  // 2x2 Vandermonde on nodes {1,2}, rhs (3,5): the line through (1,3),(2,5).
  Matrix m = {{fe(1), fe(1)}, {fe(1), fe(2)}};
  LinearSolveResult r = solve_linear(m, {fe(3), fe(5)});
  REQUIRE(r.kind == LinearSolveResult::Kind::kUnique);
  DensePoly line = lagrange_interpolate({{fe(1), fe(3)}, {fe(2), fe(5)}});
  CHECK(line.coeff(0) == r.solution[0]);
  CHECK(line.coeff(1) == r.solution[1]);
}

TEST_CASE("solve_linear singular cases") {
  Matrix m = {{fe(1), fe(1)}, {fe(2), fe(2)}};
  LinearSolveResult bad = solve_linear(m, {fe(1), fe(3)});
  CHECK(bad.kind == LinearSolveResult::Kind::kInconsistent);

  LinearSolveResult under = solve_linear(m, {fe(1), fe(2)});
  CHECK(under.kind == LinearSolveResult::Kind::kUnderdetermined);
  REQUIRE(under.free_columns.size() == 1);
  REQUIRE(under.nullspace.size() == 1);
  // Particular solution plus any nullspace multiple stays a solution.
  for (std::uint64_t s = 0; s < 5; ++s) {
    FieldElement x0 = under.solution[0] + fe(s) * under.nullspace[0][0];
    FieldElement x1 = under.solution[1] + fe(s) * under.nullspace[0][1];
    CHECK(x0 + x1 == fe(1));
  }
}

TEST_CASE("mat_inverse roundtrip") {
  Rng rng(0xc0de);
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t n = 1 + rng.below(5);
    Matrix m(n, std::vector<FieldElement>(n, fe(0)));
    for (auto& row : m) {
      for (auto& x : row) x = rng.element(q101());
    }
    try {
      Matrix inv = mat_inverse(m);
      CHECK(mat_mul(m, inv) == identity_matrix(n, q101()));
    } catch (const Error& e) {
      CHECK(e.code() == Errc::kSingularMatrix);
    }
  }
}

TEST_CASE("sqrt_mod") {
  // 2 is a non-residue mod 101 (101 = 5 mod 8); 5 is a residue (45^2 = 5).
  CHECK(!sqrt_mod(fe(2)).has_value());
  auto r = sqrt_mod(fe(5));
  REQUIRE(r.has_value());
  CHECK(*r * *r == fe(5));
  const FieldModulus* big = FieldModulus::preset("bn254scalar");
  Rng rng(0xabcd);
  for (int i = 0; i < 10; ++i) {
    FieldElement a = rng.element(big);
    FieldElement sq = a * a;
    auto root = sqrt_mod(sq);
    REQUIRE(root.has_value());
    CHECK(*root * *root == sq);
  }
}
