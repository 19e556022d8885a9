#include <doctest.h>

#include "support.hpp"
#include "zkcraft/viop.hpp"

using namespace zkcraft;
using namespace zkcraft::test;

namespace {

const FieldModulus* q101() { return FieldModulus::preset("test101"); }
FieldElement fe(std::uint64_t v) { return FieldElement::from_u64(v, q101()); }

struct ToyRun {
  R1csInstance inst;
  std::vector<std::uint32_t> pool;
  NodePlan plan;
  std::vector<std::uint8_t> delta;
  std::vector<FieldElement> c;
  Witness w_prime;
  std::vector<FieldElement> y_orig;
  IopConfig cfg;
  ProveOptions opts;
};

/// The walkthrough edit: delta = [1,0,1], c = [2,0,3], inputs a=2, b=3.
ToyRun toy_run(std::uint32_t ell = 2, bool attach_witness = false) {
  ToyRun r{toy_instance(), {0, 1, 2}, choose_nodes(q101(), 3, 2, 3),
           {1, 0, 1},      {},        {},
           {},             {},        {}};
  r.c = {fe(2), fe(0), fe(3)};
  R1csInstance edited = r.inst.edited({0, 2}, {fe(2), fe(3)});
  std::map<std::uint32_t, FieldElement> inputs{{1, fe(2)}, {2, fe(3)}};
  ForwardResult fwd = run_forward(edited, inputs);
  REQUIRE(fwd.status == ForwardResult::Status::kOk);
  r.w_prime = fwd.witness;
  r.y_orig = {fe(6), fe(8), fe(11)};
  r.cfg = IopConfig::defaults_for(r.inst, ell);
  r.opts.attach_witness = attach_witness;
  r.opts.basis = toy_basis();
  return r;
}

ViolationProof prove_toy(const ToyRun& r) {
  return prove(r.inst, r.pool, r.plan, r.delta, r.c, r.w_prime, r.y_orig, r.cfg,
               r.opts);
}

}  // namespace

TEST_CASE("delta_out basics") {
  auto u = std::vector<FieldElement>{fe(1)};
  DeltaOut same = build_delta_out({fe(5)}, {fe(5)}, u);
  CHECK(same.poly.is_zero());
  DeltaOut diff = build_delta_out({fe(9)}, {fe(4)}, u);
  CHECK(diff.poly.degree() == 0);
  CHECK(diff.poly.coeff(0) == fe(5));

  Rng rng(77);
  std::vector<FieldElement> u3 = {fe(2), fe(5), fe(9)};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<FieldElement> ya, yb;
    for (int j = 0; j < 3; ++j) {
      ya.push_back(rng.element(q101()));
      yb.push_back(rng.element(q101()));
    }
    DeltaOut d = build_delta_out(ya, yb, u3);
    for (int j = 0; j < 3; ++j) {
      CHECK(d.poly.eval(u3[j]) == ya[j] - yb[j]);
    }
  }
}

TEST_CASE("build_phi vanishes exactly on valid edited witnesses") {
  ToyRun r = toy_run();
  RowVortexEncoding enc = encode_with_basis(r.pool, r.plan, r.delta, r.c,
                                            r.opts.basis->first, r.opts.basis->second);
  PhiR phi = build_phi(r.inst, enc, r.w_prime, r.cfg);
  for (const auto& v : phi.evals) CHECK(v.is_zero());
  CHECK(phi.degree_bound == 2 * 6 + 3 - 1);

  // Unedited valid witness, zero edit.
  RowVortexEncoding enc0 =
      encode_with_basis(r.pool, r.plan, {0, 0, 0}, {fe(0), fe(0), fe(0)},
                        r.opts.basis->first, r.opts.basis->second);
  PhiR phi0 = build_phi(r.inst, enc0, toy_witness(), r.cfg);
  for (const auto& v : phi0.evals) CHECK(v.is_zero());

  // Random bad witness: some entry nonzero.
  Rng rng(3);
  Witness bad = r.w_prime;
  bad.values[3] += fe(1);
  PhiR phib = build_phi(r.inst, enc, bad, r.cfg);
  bool any = false;
  for (const auto& v : phib.evals) any = any || !v.is_zero();
  CHECK(any);
}

TEST_CASE("toy honest proof verifies") {
  ToyRun r = toy_run();
  ViolationProof proof = prove_toy(r);
  VerifyOutcome out = verify(proof, r.inst, r.pool, r.plan, r.y_orig, r.cfg);
  CHECK(out.accepted);
  CHECK(out.reason == RejectReason::kNone);
}

TEST_CASE("toy proof at interpolating ell verifies without explicit parts") {
  ToyRun r = toy_run(/*ell=*/3);
  ViolationProof proof = prove_toy(r);
  CHECK(!proof.explicit_parts.has_value());
  VerifyOutcome out = verify(proof, r.inst, r.pool, r.plan, r.y_orig, r.cfg);
  CHECK(out.accepted);
  auto parts = reconstruct_parts(proof);
  REQUIRE(parts.has_value());
  // P = row_1 + row_3 = 2X^2 + 3X + 4; S = 2Y + 3Y^3.
  CHECK(parts->first == DensePoly({fe(4), fe(3), fe(2)}, q101()));
  CHECK(parts->second == DensePoly({fe(0), fe(2), fe(0), fe(3)}, q101()));
}

TEST_CASE("prover rejects false statements") {
  ToyRun r = toy_run();
  // y' == y: no divergence.
  ToyRun same = r;
  same.delta = {0, 0, 0};
  same.c = {fe(0), fe(0), fe(0)};
  same.w_prime = toy_witness();
  CHECK_THROWS_AS((void)prove_toy(same), Error);

  // Witness violating an edited row.
  ToyRun bad = r;
  bad.w_prime.values[3] += fe(1);
  CHECK_THROWS_AS((void)prove_toy(bad), Error);
}

TEST_CASE("transcript determinism: byte-identical proofs") {
  ToyRun r = toy_run();
  std::vector<std::uint8_t> p1 = serialize_proof(prove_toy(r));
  std::vector<std::uint8_t> p2 = serialize_proof(prove_toy(r));
  CHECK(p1 == p2);
}

TEST_CASE("proof serialization roundtrip") {
  ToyRun r = toy_run(/*ell=*/2, /*attach_witness=*/true);
  ViolationProof proof = prove_toy(r);
  std::vector<std::uint8_t> bytes = serialize_proof(proof);
  ViolationProof back = parse_proof(bytes);
  CHECK(serialize_proof(back) == bytes);
  VerifyOutcome out = verify(back, r.inst, r.pool, r.plan, r.y_orig, r.cfg);
  CHECK(out.accepted);
  CHECK(proof_to_json(back) == proof_to_json(proof));
}

TEST_CASE("tampering with a round polynomial is rejected") {
  ToyRun r = toy_run();
  ViolationProof proof = prove_toy(r);
  proof.rounds[1] = proof.rounds[1] + DensePoly::constant(fe(1));
  VerifyOutcome out = verify(proof, r.inst, r.pool, r.plan, r.y_orig, r.cfg);
  CHECK(!out.accepted);
}

TEST_CASE("tampering with y_prime is rejected") {
  ToyRun r = toy_run();
  ViolationProof proof = prove_toy(r);
  proof.y_prime[0] += fe(1);
  VerifyOutcome out = verify(proof, r.inst, r.pool, r.plan, r.y_orig, r.cfg);
  CHECK(!out.accepted);
}

TEST_CASE("flipping an opening path digest is rejected") {
  ToyRun r = toy_run();
  ViolationProof proof = prove_toy(r);
  proof.openings[0].auth_path[0][5] ^= 0x40;
  VerifyOutcome out = verify(proof, r.inst, r.pool, r.plan, r.y_orig, r.cfg);
  CHECK(!out.accepted);
}

TEST_CASE("round degree discipline enforced") {
  ToyRun r = toy_run();
  ViolationProof proof = prove_toy(r);
  // Splice a degree-3 round polynomial (keeping it otherwise consistent is
  // not required; the degree check must fire).
  proof.rounds[0] = DensePoly({fe(0), fe(0), fe(0), fe(1)}, q101());
  VerifyOutcome out = verify(proof, r.inst, r.pool, r.plan, r.y_orig, r.cfg);
  CHECK(!out.accepted);
}

TEST_CASE("smuggled y_prime == y rejected as no_divergence") {
  ToyRun r = toy_run();
  ViolationProof proof = prove_toy(r);
  // Forge a proof claiming the original outputs; recompute nothing else.
  proof.y_prime = r.y_orig;
  VerifyOutcome out = verify(proof, r.inst, r.pool, r.plan, r.y_orig, r.cfg);
  CHECK(!out.accepted);
}

TEST_CASE("knowledge error bounds") {
  KnowledgeErrorBound b = knowledge_error_bound(q101(), 2, 10, 1);
  CHECK(b.linear == mpq_class(11, 101));
  CHECK(b.exponential == mpq_class(11, 101));

  KnowledgeErrorBound b2 = knowledge_error_bound(q101(), 2, 10, 2);
  CHECK(b2.linear == mpq_class(21, 101));
  CHECK(b2.exponential == mpq_class(121, 101 * 101));

  CHECK_THROWS_AS((void)knowledge_error_bound(q101(), 2, 10, 0), Error);

  const FieldModulus* big = FieldModulus::preset("bn254scalar");
  KnowledgeErrorBound bb = knowledge_error_bound(big, 4, 1 << 20, 1);
  mpq_class tiny(1, mpz_class(1) << 200);
  CHECK(bb.linear < tiny);
}

TEST_CASE("completeness over random instances at q=101") {
  Rng rng(0x9001);
  const FieldModulus* q = q101();
  int proved = 0;
  for (int trial = 0; trial < 60; ++trial) {
    RandomInstance ri = random_instance(rng, q, 2, 4 + rng.below(4), 2);
    std::vector<std::uint32_t> pool;
    for (std::uint32_t i = 0; i < std::min<std::uint32_t>(3, ri.inst.num_constraints()); ++i) {
      pool.push_back(i);
    }
    auto edit = find_honest_edit(ri, pool, rng);
    if (!edit) continue;
    NodePlan plan = choose_nodes(q, std::uint32_t(pool.size()));
    IopConfig cfg = IopConfig::defaults_for(ri.inst, 2);
    ViolationProof proof = prove(ri.inst, pool, plan, edit->delta, edit->c,
                                 edit->w_prime, ri.y_orig, cfg, {});
    VerifyOutcome out = verify(proof, ri.inst, pool, plan, ri.y_orig, cfg);
    CHECK(out.accepted);
    ++proved;
  }
  CHECK(proved > 30);
}

TEST_CASE("grid commitment path") {
  ToyRun r = toy_run();
  r.cfg.grid_commit = true;
  ViolationProof proof = prove_toy(r);
  CHECK(proof.has_flag(ProofFlag::kGridCommit));
  VerifyOutcome out = verify(proof, r.inst, r.pool, r.plan, r.y_orig, r.cfg);
  CHECK(out.accepted);
}
