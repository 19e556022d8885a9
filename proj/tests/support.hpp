#pragma once

// Shared test fixtures: deterministic RNG, the walkthrough toy circuit, and a
// generator for random weak-assignment instances with known honest edits.

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "zkcraft/circuit.hpp"
#include "zkcraft/ff.hpp"
#include "zkcraft/slicer.hpp"
#include "zkcraft/vortex.hpp"

namespace zkcraft::test {

/// mt19937_64 with hand-rolled bounded draws (std distributions are not
/// portable across standard libraries).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }

  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) return 0;
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % bound;
  }

  FieldElement element(const FieldModulus* q) {
    if (q->fits_u64()) return FieldElement::from_u64(below(q->as_u64()), q);
    mpz_class acc = 0;
    std::size_t words = (q->bit_length() + 63) / 64 + 1;
    for (std::size_t i = 0; i < words; ++i) {
      acc <<= 64;
      mpz_class w;
      std::uint64_t x = eng_();
      mpz_import(w.get_mpz_t(), 1, 1, 8, 0, 0, &x);
      acc += w;
    }
    return FieldElement(acc, q);
  }

  FieldElement nonzero_element(const FieldModulus* q) {
    FieldElement e = element(q);
    while (e.is_zero()) e = element(q);
    return e;
  }

  bool flip() { return (eng_() & 1) != 0; }

 private:
  std::mt19937_64 eng_;
};

inline std::string toy_circuit_json() {
  return R"({
  "modulus": "101",
  "num_vars": 6,
  "var_classes": ["one", "priv_in", "priv_in", "pub_out", "pub_out", "pub_out"],
  "constraints": [
    {"a": {"1": "1"}, "b": {"2": "1"}, "c": {"3": "1"}},
    {"a": {"1": "1", "3": "1"}, "b": {"0": "1"}, "c": {"4": "1"}},
    {"a": {"2": "1", "4": "1"}, "b": {"0": "1"}, "c": {"5": "1"}}
  ],
  "weak_sites": [
    {"site_id": "main.c", "rows": [0]},
    {"site_id": "main.d", "rows": [1]},
    {"site_id": "main.e", "rows": [2]}
  ],
  "public_outputs": [3, 4, 5]
})";
}

inline std::string toy_program_text() {
  return "signal private input a;\n"
         "signal private input b;\n"
         "signal private input c;\n"
         "signal output d;\n"
         "signal output e;\n"
         "\n"
         "c <== a * b;\n"
         "d <== c + a;\n"
         "e <== d + b;\n";
}

inline R1csInstance toy_instance() { return parse_circuit_json(toy_circuit_json()); }

/// Honest witness for inputs a=2, b=3: w = (1, 2, 3, 6, 8, 11).
inline Witness toy_witness() {
  const FieldModulus* q = FieldModulus::preset("test101");
  Witness w;
  for (std::uint64_t v : {1, 2, 3, 6, 8, 11}) {
    w.values.push_back(FieldElement::from_u64(v, q));
  }
  return w;
}

/// The walkthrough's explicit encodings: row polys X^2+X+1, 2X^2+3X+1,
/// X^2+2X+3 and selectors Y, Y^2, Y^3.
inline std::pair<std::vector<DensePoly>, std::vector<DensePoly>> toy_basis() {
  const FieldModulus* q = FieldModulus::preset("test101");
  auto fe = [&](std::uint64_t v) { return FieldElement::from_u64(v, q); };
  std::vector<DensePoly> rows = {
      DensePoly({fe(1), fe(1), fe(1)}, q),
      DensePoly({fe(1), fe(3), fe(2)}, q),
      DensePoly({fe(3), fe(2), fe(1)}, q),
  };
  std::vector<DensePoly> sels = {
      DensePoly({fe(0), fe(1)}, q),
      DensePoly({fe(0), fe(0), fe(1)}, q),
      DensePoly({fe(0), fe(0), fe(0), fe(1)}, q),
  };
  return {rows, sels};
}

struct RandomInstance {
  R1csInstance inst;
  Witness honest;                       // original run
  std::map<std::uint32_t, FieldElement> honest_inputs;
  std::vector<FieldElement> y_orig;
};

/// Chain-shaped weak-assignment circuit: inputs feed a sequence of weak rows
/// (mix of products and affine combinations), the tail wires become outputs.
inline RandomInstance random_instance(Rng& rng, const FieldModulus* q,
                                      std::uint32_t n_inputs, std::uint32_t n_rows,
                                      std::uint32_t n_outputs) {
  std::uint32_t n = 1 + n_inputs + n_rows;
  std::vector<VarClass> classes(n, VarClass::kIntermediate);
  classes[0] = VarClass::kOne;
  for (std::uint32_t i = 0; i < n_inputs; ++i) {
    classes[1 + i] = VarClass::kPrivateInput;
  }
  n_outputs = std::min(n_outputs, n_rows);
  for (std::uint32_t i = 0; i < n_outputs; ++i) {
    classes[n - 1 - i] = VarClass::kPublicOutput;
  }

  std::vector<ConstraintRow> rows;
  std::vector<WeakSite> sites;
  for (std::uint32_t r = 0; r < n_rows; ++r) {
    std::uint32_t def = 1 + n_inputs + r;  // wire defined by this row
    std::uint32_t avail = def;             // wires 0..def-1 are defined
    ConstraintRow row;
    bool quadratic = rng.flip();
    if (quadratic) {
      std::uint32_t u = std::uint32_t(rng.below(avail));
      std::uint32_t v = std::uint32_t(rng.below(avail));
      row.a.push_back({u, rng.nonzero_element(q)});
      row.b.push_back({v, rng.nonzero_element(q)});
    } else {
      // affine combination of up to three known wires times the unit wire
      std::map<std::uint32_t, FieldElement> terms;
      std::uint32_t cnt = 1 + std::uint32_t(rng.below(3));
      for (std::uint32_t i = 0; i < cnt; ++i) {
        std::uint32_t u = std::uint32_t(rng.below(avail));
        auto it = terms.find(u);
        if (it == terms.end()) {
          terms.emplace(u, rng.nonzero_element(q));
        }
      }
      for (const auto& [idx, coeff] : terms) row.a.push_back({idx, coeff});
      row.b.push_back({0, FieldElement::one(q)});
    }
    row.c.push_back({def, FieldElement::one(q)});
    rows.push_back(std::move(row));
    sites.push_back({"site." + std::to_string(r), {r}});
  }

  R1csInstance inst(q, n, std::move(rows), std::move(classes), std::move(sites));

  std::map<std::uint32_t, FieldElement> inputs;
  for (std::uint32_t i = 0; i < n_inputs; ++i) {
    inputs.emplace(1 + i, rng.element(q));
  }
  ForwardResult fwd = run_forward(inst, inputs);
  // Chain circuits always execute.
  if (fwd.status != ForwardResult::Status::kOk) {
    throw Error(Errc::kInvariantError, "generator produced a stuck instance");
  }
  std::vector<FieldElement> y = outputs_of(inst, fwd.witness);
  return RandomInstance{std::move(inst), fwd.witness, std::move(inputs),
                        std::move(y)};
}

struct HonestEdit {
  std::vector<std::uint8_t> delta;
  std::vector<FieldElement> c;
  Witness w_prime;
  std::vector<FieldElement> y_prime;
};

/// Picks a random nonempty edit over the pool and re-executes until the
/// mutated run diverges on the outputs. Inputs stay at the honest assignment.
inline std::optional<HonestEdit> find_honest_edit(const RandomInstance& ri,
                                                  const std::vector<std::uint32_t>& pool,
                                                  Rng& rng, int max_tries = 64) {
  const FieldModulus* q = ri.inst.modulus();
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    HonestEdit e;
    e.delta.assign(pool.size(), 0);
    e.c.assign(pool.size(), FieldElement::zero(q));
    std::vector<std::uint32_t> rows;
    std::vector<FieldElement> consts;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (rng.flip()) {
        e.delta[i] = 1;
        e.c[i] = rng.element(q);
        rows.push_back(pool[i]);
        consts.push_back(e.c[i]);
      }
    }
    if (rows.empty()) continue;
    R1csInstance edited = ri.inst.edited(rows, consts);
    ForwardResult fwd = run_forward(edited, ri.honest_inputs);
    if (fwd.status != ForwardResult::Status::kOk) continue;
    std::vector<FieldElement> y = outputs_of(edited, fwd.witness);
    if (y == ri.y_orig) continue;
    e.w_prime = fwd.witness;
    e.y_prime = std::move(y);
    return e;
  }
  return std::nullopt;
}

}  // namespace zkcraft::test
