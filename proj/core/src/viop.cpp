#include "zkcraft/viop.hpp"

#include <algorithm>
#include <cstring>

#include <json.hpp>

namespace zkcraft {

void Transcript::absorb(std::string_view label, const void* data, std::size_t len) {
  Sha256 h;
  h.update(state_.data(), state_.size());
  std::uint8_t lbl_len = std::uint8_t(label.size());
  h.update(&lbl_len, 1);
  h.update(label);
  std::uint8_t len8[8];
  for (int i = 0; i < 8; ++i) len8[i] = std::uint8_t(std::uint64_t(len) >> (8 * i));
  h.update(len8, 8);
  h.update(data, len);
  state_ = h.finish();
}

void Transcript::absorb_u64(std::string_view label, std::uint64_t v) {
  std::uint8_t b[8];
  for (int i = 0; i < 8; ++i) b[i] = std::uint8_t(v >> (8 * i));
  absorb(label, b, 8);
}

void Transcript::absorb_element(std::string_view label, const FieldElement& e) {
  absorb(label, e.to_bytes());
}

void Transcript::absorb_elements(std::string_view label,
                                 const std::vector<FieldElement>& es) {
  std::vector<std::uint8_t> bytes;
  for (const auto& e : es) e.append_bytes(bytes);
  absorb(label, bytes);
}

void Transcript::absorb_poly(std::string_view label, const DensePoly& p) {
  std::vector<std::uint8_t> bytes;
  for (const auto& c : p.coeffs()) c.append_bytes(bytes);
  absorb(label, bytes);
}

FieldElement Transcript::challenge_field(std::string_view label, const FieldModulus* q) {
  // Counter-mode squeeze with rejection sampling on the top range.
  mpz_class bound;
  mpz_ui_pow_ui(bound.get_mpz_t(), 2, 256);
  mpz_class limit = (bound / q->value()) * q->value();
  for (std::uint64_t ctr = 0;; ++ctr) {
    Sha256 h;
    h.update(state_.data(), state_.size());
    std::uint8_t lbl_len = std::uint8_t(label.size());
    h.update(&lbl_len, 1);
    h.update(label);
    std::uint8_t c8[8];
    for (int i = 0; i < 8; ++i) c8[i] = std::uint8_t(ctr >> (8 * i));
    h.update(c8, 8);
    Digest d = h.finish();
    mpz_class x;
    mpz_import(x.get_mpz_t(), d.size(), 1, 1, 0, 0, d.data());
    if (x < limit) {
      // Absorb the accepted counter so successive challenges differ.
      absorb_u64(label, ctr);
      return FieldElement(x % q->value(), q);
    }
  }
}

std::uint64_t Transcript::challenge_u64(std::string_view label) {
  Sha256 h;
  h.update(state_.data(), state_.size());
  std::uint8_t lbl_len = std::uint8_t(label.size());
  h.update(&lbl_len, 1);
  h.update(label);
  Digest d = h.finish();
  absorb(label, d.data(), 8);
  std::uint64_t x = 0;
  for (int i = 0; i < 8; ++i) x = (x << 8) | d[i];
  return x;
}

IopConfig IopConfig::defaults_for(const R1csInstance& inst, std::uint32_t ell) {
  IopConfig cfg;
  std::uint32_t m = inst.num_constraints();
  std::uint32_t t = 1;
  while ((std::uint64_t(1) << t) < m) ++t;
  cfg.domain_log = t;
  cfg.repetitions = ell;
  std::uint32_t m_out = std::uint32_t(inst.public_output_indices().size());
  for (std::uint32_t j = 0; j < m_out; ++j) {
    cfg.output_points.push_back(FieldElement::from_u64(j, inst.modulus()));
  }
  return cfg;
}

DeltaOut build_delta_out(const std::vector<FieldElement>& y_prime,
                         const std::vector<FieldElement>& y_orig,
                         const std::vector<FieldElement>& u_points) {
  if (y_prime.size() != y_orig.size() || y_prime.size() != u_points.size()) {
    throw Error(Errc::kShapeMismatch, "delta_out shapes");
  }
  if (u_points.empty()) throw Error(Errc::kShapeMismatch, "no output points");
  const FieldModulus* q = u_points[0].modulus();
  std::vector<std::pair<FieldElement, FieldElement>> pts;
  pts.reserve(u_points.size());
  for (std::size_t j = 0; j < u_points.size(); ++j) {
    pts.emplace_back(u_points[j], y_prime[j] - y_orig[j]);
  }
  DeltaOut out{lagrange_interpolate(pts), y_prime, y_orig};
  (void)q;
  return out;
}

PhiR build_phi(const R1csInstance& inst, const RowVortexEncoding& enc,
               const Witness& w_prime, const IopConfig& cfg) {
  if (w_prime.values.size() != inst.num_vars()) {
    throw Error(Errc::kShapeMismatch, "build_phi witness size");
  }
  std::vector<std::uint32_t> edited_rows;
  std::vector<FieldElement> consts;
  for (std::size_t i = 0; i < enc.delta.size(); ++i) {
    if (enc.delta[i]) {
      edited_rows.push_back(enc.pool_rows[i]);
      consts.push_back(enc.c[i]);
    }
  }
  R1csInstance edited = inst.edited(edited_rows, consts);
  ResidualVector res = eval_residuals(edited, w_prime);

  PhiR phi;
  std::uint64_t size = std::uint64_t(1) << cfg.domain_log;
  if (size < inst.num_constraints()) {
    throw Error(Errc::kShapeMismatch, "sum-check domain smaller than constraint count");
  }
  phi.evals.reserve(size);
  const FieldModulus* q = inst.modulus();
  for (std::uint64_t u = 0; u < size; ++u) {
    phi.evals.push_back(u < res.residuals.size() ? res.residuals[u]
                                                 : FieldElement::zero(q));
  }
  phi.degree_bound =
      2 * std::uint64_t(inst.num_vars()) + enc.pool_rows.size() - 1;
  return phi;
}

DensePoly phi_univariate(const PhiR& phi, const FieldModulus* q) {
  bool all_zero = true;
  for (const auto& v : phi.evals) {
    if (!v.is_zero()) {
      all_zero = false;
      break;
    }
  }
  if (all_zero) return DensePoly::zero(q);
  std::vector<std::pair<FieldElement, FieldElement>> pts;
  pts.reserve(phi.evals.size());
  for (std::size_t u = 0; u < phi.evals.size(); ++u) {
    pts.emplace_back(FieldElement::from_u64(u, q), phi.evals[u]);
  }
  return lagrange_interpolate(pts);
}

const char* reject_reason_name(RejectReason r) {
  switch (r) {
    case RejectReason::kNone: return "none";
    case RejectReason::kMalformed: return "malformed";
    case RejectReason::kTranscriptMismatch: return "transcript_mismatch";
    case RejectReason::kRoundInconsistent: return "round_inconsistent";
    case RejectReason::kOpeningInvalid: return "opening_invalid";
    case RejectReason::kFinalEvalMismatch: return "final_eval_mismatch";
    case RejectReason::kNoDivergence: return "no_divergence";
  }
  return "?";
}

namespace {

std::uint64_t next_pow2(std::uint64_t v) {
  std::uint64_t p = 1;
  while (p < v) p <<= 1;
  return p;
}

/// Degree-<=2 round polynomial from paired halves of the two tables.
DensePoly round_poly(const std::vector<FieldElement>& a,
                     const std::vector<FieldElement>& b, const FieldModulus* q,
                     const FieldElement& inv2) {
  FieldElement g0 = FieldElement::zero(q);
  FieldElement g1 = FieldElement::zero(q);
  FieldElement g2 = FieldElement::zero(q);
  FieldElement two = FieldElement::from_u64(2, q);
  for (std::size_t r = 0; r < a.size() / 2; ++r) {
    const FieldElement& a0 = a[2 * r];
    const FieldElement& a1 = a[2 * r + 1];
    const FieldElement& b0 = b[2 * r];
    const FieldElement& b1 = b[2 * r + 1];
    g0 += a0 * b0;
    g1 += a1 * b1;
    g2 += (two * a1 - a0) * (two * b1 - b0);
  }
  FieldElement c0 = g0;
  FieldElement c2 = (g2 - two * g1 + g0) * inv2;
  FieldElement c1 = g1 - c0 - c2;
  return DensePoly({c0, c1, c2}, q);
}

void fold_table(std::vector<FieldElement>& tab, const FieldElement& zeta) {
  std::size_t half = tab.size() / 2;
  for (std::size_t r = 0; r < half; ++r) {
    tab[r] = tab[2 * r] + zeta * (tab[2 * r + 1] - tab[2 * r]);
  }
  tab.resize(half);
}

void absorb_prelude(Transcript& tr, const ViolationProof& p,
                    const std::vector<DensePoly>& row_polys,
                    const std::vector<DensePoly>& sel_polys) {
  std::vector<std::uint8_t> hdr;
  hdr.push_back(p.scheme_id);
  std::string qs = p.q->value().get_str();
  hdr.insert(hdr.end(), qs.begin(), qs.end());
  auto push_u64 = [&hdr](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) hdr.push_back(std::uint8_t(v >> (8 * i)));
  };
  push_u64(p.t);
  push_u64(p.ell);
  push_u64(p.m_out);
  push_u64(p.d);
  push_u64(p.k);
  push_u64(p.d_row);
  push_u64(p.d_sel);
  push_u64(p.commit_domain);
  push_u64(p.y_domain);
  hdr.push_back(p.flags);
  tr.absorb("header", hdr);

  std::vector<std::uint8_t> pool_bytes;
  for (std::uint32_t r : p.pool_rows) {
    for (int i = 0; i < 4; ++i) pool_bytes.push_back(std::uint8_t(r >> (8 * i)));
  }
  tr.absorb("pool", pool_bytes);
  tr.absorb_elements("u_points", p.u_points);
  tr.absorb_elements("y_orig", p.y_orig);
  for (const auto& rp : row_polys) tr.absorb_poly("row_poly", rp);
  for (const auto& sp : sel_polys) tr.absorb_poly("sel_poly", sp);
}

struct TableFold {
  std::vector<FieldElement> tab;
  FieldElement final_value(const FieldModulus* q) const {
    return tab.size() == 1 ? tab[0] : FieldElement::zero(q);
  }
};

}  // namespace

std::pair<std::vector<DensePoly>, std::vector<DensePoly>> proof_basis(
    const ViolationProof& proof, const R1csInstance& inst, const NodePlan& plan) {
  if (proof.has_flag(ProofFlag::kExplicitBasis)) {
    return {proof.basis_row_polys, proof.basis_sel_polys};
  }
  return {default_row_polys(inst, proof.pool_rows, plan), default_sel_polys(plan)};
}

std::optional<std::pair<DensePoly, DensePoly>> reconstruct_parts(
    const ViolationProof& proof) {
  const FieldModulus* q = proof.q;
  if (proof.explicit_parts) {
    const auto& [p, s] = *proof.explicit_parts;
    if (p.degree() > int(proof.d_row) || s.degree() > int(proof.d_sel)) {
      return std::nullopt;
    }
    if (!s.coeff(0).is_zero()) return std::nullopt;
    return std::make_pair(p, s);
  }
  // Per-Y-slot interpolation across the opened slices. Slot 0 carries P, the
  // higher slots are constants (S's coefficients).
  if (proof.tuples.size() < proof.d_row + 1) return std::nullopt;
  std::vector<std::pair<FieldElement, FieldElement>> p_pts;
  for (std::size_t j = 0; j <= proof.d_row && j < proof.tuples.size(); ++j) {
    p_pts.emplace_back(proof.tuples[j].point, proof.tuples[j].slice.coeff(0));
  }
  DensePoly p = [&]() -> DensePoly {
    try {
      return lagrange_interpolate(p_pts);
    } catch (const Error&) {
      return DensePoly::zero(q);
    }
  }();
  if (p.degree() > int(proof.d_row)) return std::nullopt;

  const DensePoly& first = proof.tuples[0].slice;
  std::vector<FieldElement> s_coeffs;
  s_coeffs.push_back(FieldElement::zero(q));
  for (int i = 1; i <= first.degree(); ++i) s_coeffs.push_back(first.coeff(i));
  DensePoly s(std::move(s_coeffs), q);
  if (s.degree() > int(proof.d_sel)) return std::nullopt;
  return std::make_pair(std::move(p), std::move(s));
}

ViolationProof prove(const R1csInstance& inst, const std::vector<std::uint32_t>& pool_rows,
                     const NodePlan& plan, const std::vector<std::uint8_t>& delta,
                     const std::vector<FieldElement>& c, const Witness& w_prime,
                     const std::vector<FieldElement>& y_orig, const IopConfig& cfg,
                     const ProveOptions& opts) {
  const FieldModulus* q = inst.modulus();
  std::uint32_t k = std::uint32_t(pool_rows.size());
  if (k == 0 || plan.k() != k || delta.size() != k || c.size() != k) {
    throw Error(Errc::kShapeMismatch, "prove: pool/plan/delta/c sizes");
  }
  if (cfg.repetitions < 1) throw Error(Errc::kInvariantError, "ell must be >= 1");
  if (cfg.output_points.empty()) {
    throw Error(Errc::kShapeMismatch, "prove: no output points configured");
  }

  // Honest-prover self-check: the statement must actually hold.
  std::vector<std::uint32_t> edited_rows;
  std::vector<FieldElement> consts;
  for (std::size_t i = 0; i < delta.size(); ++i) {
    if (delta[i] > 1) throw Error(Errc::kInvariantError, "delta entries must be bits");
    if (delta[i]) {
      edited_rows.push_back(pool_rows[i]);
      consts.push_back(c[i]);
    }
  }
  R1csInstance edited = inst.edited(edited_rows, consts);
  if (!eval_residuals(edited, w_prime).all_zero()) {
    throw Error(Errc::kProverStatementFalse,
                "witness does not satisfy the edited system");
  }
  std::vector<FieldElement> y_prime = outputs_of(inst, w_prime);
  if (y_prime.size() != y_orig.size() || y_prime.size() != cfg.output_points.size()) {
    throw Error(Errc::kShapeMismatch, "output vector sizes");
  }
  if (y_prime == y_orig) {
    throw Error(Errc::kProverStatementFalse, "no output divergence");
  }

  RowVortexEncoding enc =
      opts.basis ? encode_with_basis(pool_rows, plan, delta, c, opts.basis->first,
                                     opts.basis->second)
                 : encode(pool_rows, plan, delta, c, inst);

  ViolationProof proof;
  proof.q = q;
  proof.t = std::max<std::uint32_t>(cfg.domain_log, 1);
  proof.ell = cfg.repetitions;
  proof.m_out = std::uint32_t(cfg.output_points.size());
  proof.d = 2 * std::uint64_t(inst.num_vars()) + k - 1;
  proof.k = k;
  proof.d_row = plan.d_row;
  proof.d_sel = plan.d_sel;
  proof.pool_rows = pool_rows;
  proof.u_points = cfg.output_points;
  proof.y_orig = y_orig;
  proof.y_prime = y_prime;

  DensePoly p_part = enc.x_part();
  DensePoly s_part = enc.y_part();

  bool grid = cfg.grid_commit || k > 8;
  std::uint32_t y_domain = 1;
  std::uint64_t commit_domain;
  if (grid) {
    y_domain = std::uint32_t(next_pow2(plan.d_sel + 1));
    std::uint64_t x_domain =
        cfg.commit_domain ? cfg.commit_domain
                          : std::max<std::uint64_t>(next_pow2(plan.d_row + 1), 4);
    commit_domain = x_domain * y_domain;
    proof.flags |= std::uint8_t(ProofFlag::kGridCommit);
  } else {
    commit_domain = cfg.commit_domain
                        ? cfg.commit_domain
                        : std::max<std::uint64_t>(next_pow2(plan.d_row + 1), 4);
  }
  proof.commit_domain = commit_domain;
  proof.y_domain = y_domain;

  bool attach_witness = opts.attach_witness || cfg.repetitions == 1;
  bool explicit_parts = cfg.repetitions < plan.d_row + 1;
  if (attach_witness) proof.flags |= std::uint8_t(ProofFlag::kWitness);
  if (explicit_parts) proof.flags |= std::uint8_t(ProofFlag::kExplicitParts);
  if (opts.basis) proof.flags |= std::uint8_t(ProofFlag::kExplicitBasis);

  if (opts.basis) {
    proof.basis_row_polys = enc.row_polys;
    proof.basis_sel_polys = enc.sel_polys;
  }

  Transcript tr;
  absorb_prelude(tr, proof, enc.row_polys, enc.sel_polys);
  FieldElement tau = tr.challenge_field("tau", q);

  CommittedEncoding ce = grid ? commit_grid(enc, commit_domain / y_domain, y_domain)
                              : commit(enc, commit_domain, tau);
  proof.commitment = ce.commitment;
  tr.absorb("root", ce.commitment.root.data(), ce.commitment.root.size());
  tr.absorb_elements("y_prime", y_prime);

  // Sum-check over f = Phi~ * D~ on {0,1}^t; claimed sum is zero.
  IopConfig cfg_t = cfg;
  cfg_t.domain_log = proof.t;
  PhiR phi = build_phi(inst, enc, w_prime, cfg_t);
  DeltaOut dout = build_delta_out(y_prime, y_orig, cfg.output_points);
  std::uint64_t dom = std::uint64_t(1) << proof.t;
  std::vector<FieldElement> a_tab = phi.evals;
  std::vector<FieldElement> b_tab;
  b_tab.reserve(dom);
  for (std::uint64_t u = 0; u < dom; ++u) {
    b_tab.push_back(dout.poly.eval(FieldElement::from_u64(u, q)));
  }

  FieldElement inv2 = FieldElement::from_u64(2, q).inv();
  for (std::uint32_t round = 0; round < proof.t; ++round) {
    DensePoly g = round_poly(a_tab, b_tab, q, inv2);
    tr.absorb_poly("round", g);
    FieldElement zeta = tr.challenge_field("zeta", q);
    fold_table(a_tab, zeta);
    fold_table(b_tab, zeta);
    proof.rounds.push_back(std::move(g));
    proof.challenges.push_back(std::move(zeta));
  }
  proof.phi_final = a_tab[0];
  tr.absorb_element("phi_final", proof.phi_final);

  DensePoly phi_uni = phi_univariate(phi, q);

  // Scheduled divergence/opening challenges, with bounded retries when every
  // scheduled sample hits a root of Delta_out (ell >= 2 only).
  std::uint32_t scheduled = proof.ell;
  bool any_nonzero = false;
  for (std::uint32_t j = 0; j < scheduled + kMaxDivergenceRetries; ++j) {
    if (j >= scheduled && (any_nonzero || proof.ell == 1)) break;
    OpeningTuple tup;
    tup.point = tr.challenge_field(j < scheduled ? "xi" : "xi-retry", q);
    tup.slice = s_part + DensePoly::constant(p_part.eval(tup.point));
    tup.phi_at = phi_uni.eval(tup.point);
    tup.delta_at = dout.poly.eval(tup.point);
    if (!tup.delta_at.is_zero()) any_nonzero = true;
    tr.absorb_poly("slice", tup.slice);
    tr.absorb_element("phi_at", tup.phi_at);
    tr.absorb_element("delta_at", tup.delta_at);
    proof.tuples.push_back(std::move(tup));
  }

  for (std::uint32_t j = 0; j < proof.ell; ++j) {
    std::uint64_t idx = tr.challenge_u64("open-idx") % commit_domain;
    OpeningProof op = open(ce, idx);
    tr.absorb_u64("open-at", idx);
    tr.absorb_element("open-val", op.value);
    proof.openings.push_back(std::move(op));
  }

  if (attach_witness) {
    proof.witness_evals = w_prime.values;
    tr.absorb_elements("witness", proof.witness_evals);
  }
  if (explicit_parts) {
    proof.explicit_parts = std::make_pair(p_part, s_part);
    tr.absorb_poly("part_p", p_part);
    tr.absorb_poly("part_s", s_part);
  }
  proof.transcript_digest = tr.state();
  return proof;
}

namespace {

struct Rejector {
  VerifyOutcome out;
  VerifyOutcome reject(RejectReason r, std::string detail) {
    out.accepted = false;
    out.reason = r;
    out.detail = std::move(detail);
    return out;
  }
};

}  // namespace

VerifyOutcome verify(const ViolationProof& proof, const R1csInstance& inst,
                     const std::vector<std::uint32_t>& pool_rows, const NodePlan& plan,
                     const std::vector<FieldElement>& y_orig, const IopConfig& cfg) {
  Rejector rj;
  const FieldModulus* q = inst.modulus();

  // Structural checks.
  if (proof.q != q) return rj.reject(RejectReason::kMalformed, "field mismatch");
  if (proof.scheme_id != kSchemeMerkleEvalV1) {
    return rj.reject(RejectReason::kMalformed, "unknown scheme");
  }
  if (proof.pool_rows != pool_rows || proof.k != pool_rows.size() ||
      plan.k() != proof.k || proof.d_row != plan.d_row || proof.d_sel != plan.d_sel) {
    return rj.reject(RejectReason::kMalformed, "pool/plan mismatch");
  }
  if (proof.y_orig != y_orig) {
    return rj.reject(RejectReason::kMalformed, "original output mismatch");
  }
  if (proof.u_points != cfg.output_points) {
    return rj.reject(RejectReason::kMalformed, "output points mismatch");
  }
  if (proof.m_out != proof.u_points.size() || proof.y_prime.size() != proof.m_out ||
      proof.y_orig.size() != proof.m_out || proof.m_out == 0) {
    return rj.reject(RejectReason::kMalformed, "output shape");
  }
  if (proof.d != 2 * std::uint64_t(inst.num_vars()) + proof.k - 1) {
    return rj.reject(RejectReason::kMalformed, "degree bound mismatch");
  }
  if (proof.t < 1 || proof.rounds.size() != proof.t ||
      proof.challenges.size() != proof.t) {
    return rj.reject(RejectReason::kMalformed, "round shape");
  }
  if ((std::uint64_t(1) << proof.t) < inst.num_constraints()) {
    return rj.reject(RejectReason::kMalformed, "domain below constraint count");
  }
  if (proof.ell < 1 || proof.tuples.size() < proof.ell ||
      proof.tuples.size() > proof.ell + kMaxDivergenceRetries) {
    return rj.reject(RejectReason::kMalformed, "tuple count");
  }
  if (proof.ell == 1 && proof.tuples.size() != 1) {
    return rj.reject(RejectReason::kMalformed, "retries not allowed at ell=1");
  }
  if (proof.openings.size() != proof.ell) {
    return rj.reject(RejectReason::kMalformed, "opening count");
  }
  if (proof.has_flag(ProofFlag::kWitness) &&
      proof.witness_evals.size() != inst.num_vars()) {
    return rj.reject(RejectReason::kMalformed, "witness length");
  }
  if (proof.ell < proof.d_row + 1 && !proof.explicit_parts) {
    return rj.reject(RejectReason::kMalformed,
                     "explicit coefficient list required at this ell");
  }
  bool grid = proof.has_flag(ProofFlag::kGridCommit);
  if (proof.commitment.domain_size != proof.commit_domain ||
      proof.commitment.y_domain != proof.y_domain ||
      (grid ? proof.y_domain < 1 : proof.y_domain != 1)) {
    return rj.reject(RejectReason::kMalformed, "commitment shape");
  }

  // Reconstruct the committed object and the encoding basis.
  auto basis = proof_basis(proof, inst, plan);
  auto parts = reconstruct_parts(proof);
  if (!parts) {
    return rj.reject(RejectReason::kMalformed, "cannot reconstruct committed object");
  }
  const DensePoly& p_part = parts->first;
  const DensePoly& s_part = parts->second;

  // Transcript replay.
  Transcript tr;
  absorb_prelude(tr, proof, basis.first, basis.second);
  FieldElement tau = tr.challenge_field("tau", q);
  tr.absorb("root", proof.commitment.root.data(), proof.commitment.root.size());
  tr.absorb_elements("y_prime", proof.y_prime);
  for (std::uint32_t r = 0; r < proof.t; ++r) {
    tr.absorb_poly("round", proof.rounds[r]);
    FieldElement zeta = tr.challenge_field("zeta", q);
    if (zeta != proof.challenges[r]) {
      return rj.reject(RejectReason::kTranscriptMismatch,
                       "round challenge " + std::to_string(r));
    }
  }
  tr.absorb_element("phi_final", proof.phi_final);
  for (std::size_t j = 0; j < proof.tuples.size(); ++j) {
    FieldElement xi =
        tr.challenge_field(j < proof.ell ? "xi" : "xi-retry", q);
    if (xi != proof.tuples[j].point) {
      return rj.reject(RejectReason::kTranscriptMismatch,
                       "opening challenge " + std::to_string(j));
    }
    tr.absorb_poly("slice", proof.tuples[j].slice);
    tr.absorb_element("phi_at", proof.tuples[j].phi_at);
    tr.absorb_element("delta_at", proof.tuples[j].delta_at);
  }
  std::vector<std::uint64_t> open_indices;
  for (std::uint32_t j = 0; j < proof.ell; ++j) {
    std::uint64_t idx = tr.challenge_u64("open-idx") % proof.commit_domain;
    open_indices.push_back(idx);
    if (j >= proof.openings.size() || proof.openings[j].index != idx) {
      return rj.reject(RejectReason::kTranscriptMismatch,
                       "opening index " + std::to_string(j));
    }
    tr.absorb_u64("open-at", idx);
    tr.absorb_element("open-val", proof.openings[j].value);
  }
  if (proof.has_flag(ProofFlag::kWitness)) {
    tr.absorb_elements("witness", proof.witness_evals);
  }
  if (proof.explicit_parts) {
    tr.absorb_poly("part_p", proof.explicit_parts->first);
    tr.absorb_poly("part_s", proof.explicit_parts->second);
  }
  if (tr.state() != proof.transcript_digest) {
    return rj.reject(RejectReason::kTranscriptMismatch, "transcript digest");
  }

  // Round consistency: claimed sum is zero and iterated sums agree; every
  // round polynomial respects the degree discipline.
  for (std::uint32_t r = 0; r < proof.t; ++r) {
    if (proof.rounds[r].degree() > 2 ||
        std::uint64_t(std::max(proof.rounds[r].degree(), 0)) > proof.d) {
      return rj.reject(RejectReason::kRoundInconsistent,
                       "round degree bound exceeded at round " + std::to_string(r));
    }
  }
  FieldElement zero = FieldElement::zero(q);
  FieldElement one = FieldElement::one(q);
  FieldElement claim = zero;
  for (std::uint32_t r = 0; r < proof.t; ++r) {
    FieldElement at0 = proof.rounds[r].eval(zero);
    FieldElement at1 = proof.rounds[r].eval(one);
    if (at0 + at1 != claim) {
      return rj.reject(RejectReason::kRoundInconsistent,
                       "iterated sum mismatch at round " + std::to_string(r));
    }
    claim = proof.rounds[r].eval(proof.challenges[r]);
  }

  // Final evaluation: g_t(zeta_t) = Phi~(zeta) * D~(zeta) with D~ recomputed.
  DeltaOut dout = build_delta_out(proof.y_prime, proof.y_orig, proof.u_points);
  std::uint64_t dom = std::uint64_t(1) << proof.t;
  std::vector<FieldElement> b_tab;
  b_tab.reserve(dom);
  for (std::uint64_t u = 0; u < dom; ++u) {
    b_tab.push_back(dout.poly.eval(FieldElement::from_u64(u, q)));
  }
  for (std::uint32_t r = 0; r < proof.t; ++r) fold_table(b_tab, proof.challenges[r]);
  FieldElement d_final = b_tab[0];
  if (claim != proof.phi_final * d_final) {
    return rj.reject(RejectReason::kFinalEvalMismatch,
                     "product-sum check: g_t(zeta) != phi_final * delta_mle");
  }
  // Direct residual-vanishing claim (stronger than the product identity).
  if (!proof.phi_final.is_zero()) {
    return rj.reject(RejectReason::kFinalEvalMismatch, "phi_final nonzero");
  }

  // Opened slices must agree with the reconstructed object, and the claimed
  // residual openings must vanish.
  for (std::size_t j = 0; j < proof.tuples.size(); ++j) {
    const OpeningTuple& tup = proof.tuples[j];
    DensePoly expect_slice = s_part + DensePoly::constant(p_part.eval(tup.point));
    if (tup.slice != expect_slice) {
      return rj.reject(RejectReason::kFinalEvalMismatch,
                       "slice inconsistent with committed object at tuple " +
                           std::to_string(j));
    }
    if (!tup.phi_at.is_zero()) {
      return rj.reject(RejectReason::kFinalEvalMismatch,
                       "phi_nonzero_at_challenge " + std::to_string(j));
    }
    if (tup.delta_at != dout.poly.eval(tup.point)) {
      return rj.reject(RejectReason::kFinalEvalMismatch,
                       "delta opening mismatch at tuple " + std::to_string(j));
    }
  }

  // Merkle spot checks bind the reconstructed object to the commitment.
  for (std::size_t j = 0; j < proof.openings.size(); ++j) {
    const OpeningProof& op = proof.openings[j];
    if (!verify_opening(proof.commitment, op)) {
      return rj.reject(RejectReason::kOpeningInvalid,
                       "authentication path " + std::to_string(j));
    }
    FieldElement expect = grid
        ? p_part.eval(FieldElement::from_u64(op.index / proof.y_domain, q)) +
              s_part.eval(FieldElement::from_u64(op.index % proof.y_domain, q))
        : p_part.eval(FieldElement::from_u64(op.index, q)) + s_part.eval(tau);
    if (op.value != expect) {
      return rj.reject(RejectReason::kOpeningInvalid,
                       "opened value diverges from committed object at " +
                           std::to_string(j));
    }
  }

  // When the witness rides along, re-derive everything and cross-check.
  if (proof.has_flag(ProofFlag::kWitness)) {
    Witness w;
    w.values = proof.witness_evals;
    if (w.values.empty() || !w.values[0].is_one()) {
      return rj.reject(RejectReason::kFinalEvalMismatch, "witness constant wire");
    }
    auto coords = recover_selection_coords(p_part, s_part, basis.first, basis.second);
    if (!coords) {
      return rj.reject(RejectReason::kFinalEvalMismatch,
                       "selection not recoverable from committed object");
    }
    std::vector<std::uint32_t> edited_rows;
    std::vector<FieldElement> consts;
    for (std::size_t i = 0; i < coords->delta_coords.size(); ++i) {
      const FieldElement& dv = coords->delta_coords[i];
      if (!dv.is_zero() && !dv.is_one()) {
        return rj.reject(RejectReason::kFinalEvalMismatch, "non-boolean selection");
      }
      if (dv.is_one()) {
        edited_rows.push_back(proof.pool_rows[i]);
        consts.push_back(coords->c_coords[i]);
      }
    }
    R1csInstance edited = inst.edited(edited_rows, consts);
    if (!eval_residuals(edited, w).all_zero()) {
      return rj.reject(RejectReason::kFinalEvalMismatch,
                       "witness violates edited system");
    }
    if (outputs_of(inst, w) != proof.y_prime) {
      return rj.reject(RejectReason::kFinalEvalMismatch,
                       "witness outputs differ from claimed y'");
    }
  }

  // Divergence: the indicator polynomial must be nonzero, witnessed at a
  // sampled challenge (the first one when ell = 1).
  if (proof.y_prime == proof.y_orig) {
    return rj.reject(RejectReason::kNoDivergence, "y' equals y");
  }
  if (proof.ell == 1) {
    if (proof.tuples[0].delta_at.is_zero()) {
      return rj.reject(RejectReason::kNoDivergence,
                       "divergence not visible at first challenge");
    }
  } else {
    bool any = false;
    for (std::size_t j = 0; j < proof.tuples.size(); ++j) {
      if (!proof.tuples[j].delta_at.is_zero()) {
        any = true;
        // Retries are legal only while everything before them was zero.
        if (j + 1 < proof.tuples.size() && proof.tuples.size() > proof.ell) {
          return rj.reject(RejectReason::kMalformed, "retry after divergence");
        }
        break;
      }
    }
    if (!any) {
      return rj.reject(RejectReason::kNoDivergence,
                       "divergence not visible at any sampled challenge");
    }
  }

  rj.out.accepted = true;
  rj.out.reason = RejectReason::kNone;
  return rj.out;
}

KnowledgeErrorBound knowledge_error_bound(const FieldModulus* q, std::uint32_t m_out,
                                          std::uint64_t d, std::uint32_t ell) {
  if (m_out == 0 || ell == 0) {
    throw Error(Errc::kInvariantError, "knowledge bound parameters must be positive");
  }
  KnowledgeErrorBound out;
  mpz_class num = mpz_class(m_out) - 1 + mpz_class(ell) * mpz_class(std::to_string(d));
  out.linear = mpq_class(num, q->value());
  out.linear.canonicalize();
  mpq_class base(mpz_class(m_out) - 1 + mpz_class(std::to_string(d)), q->value());
  base.canonicalize();
  out.exponential = 1;
  for (std::uint32_t i = 0; i < ell; ++i) out.exponential *= base;
  out.exponential.canonicalize();
  return out;
}

// --- serialization ---

namespace {

void put_u8(std::vector<std::uint8_t>& o, std::uint8_t v) { o.push_back(v); }
void put_u32v(std::vector<std::uint8_t>& o, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) o.push_back(std::uint8_t(v >> (8 * i)));
}
void put_u64v(std::vector<std::uint8_t>& o, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) o.push_back(std::uint8_t(v >> (8 * i)));
}
void put_elem(std::vector<std::uint8_t>& o, const FieldElement& e) {
  e.append_bytes(o);
}
void put_elems(std::vector<std::uint8_t>& o, const std::vector<FieldElement>& es) {
  put_u32v(o, std::uint32_t(es.size()));
  for (const auto& e : es) put_elem(o, e);
}
void put_poly(std::vector<std::uint8_t>& o, const DensePoly& p) {
  put_u32v(o, std::uint32_t(p.coeffs().size()));
  for (const auto& c : p.coeffs()) put_elem(o, c);
}
void put_digest(std::vector<std::uint8_t>& o, const Digest& d) {
  o.insert(o.end(), d.begin(), d.end());
}

struct Reader {
  const std::vector<std::uint8_t>& b;
  std::size_t pos = 0;
  const FieldModulus* q = nullptr;

  void need(std::size_t n) {
    if (b.size() - pos < n) throw Error(Errc::kProofMalformed, "truncated proof");
  }
  std::uint8_t u8() {
    need(1);
    return b[pos++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[pos + i]) << (8 * i);
    pos += 8;
    return v;
  }
  FieldElement elem() {
    std::uint32_t len = u32();
    need(len);
    FieldElement e = FieldElement::from_bytes_be(b.data() + pos, len, q);
    pos += len;
    return e;
  }
  std::vector<FieldElement> elems() {
    std::uint32_t n = u32();
    if (n > (1u << 26)) throw Error(Errc::kProofMalformed, "element count");
    std::vector<FieldElement> out;
    out.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) out.push_back(elem());
    return out;
  }
  DensePoly poly() { return DensePoly(elems(), q); }
  Digest digest() {
    need(32);
    Digest d;
    std::copy(b.begin() + pos, b.begin() + pos + 32, d.begin());
    pos += 32;
    return d;
  }
};

constexpr char kProofMagic[4] = {'Z', 'K', 'V', 'P'};

}  // namespace

std::vector<std::uint8_t> serialize_proof(const ViolationProof& proof) {
  std::vector<std::uint8_t> o;
  o.insert(o.end(), kProofMagic, kProofMagic + 4);
  put_u8(o, 1);  // format version
  put_u8(o, proof.scheme_id);
  std::string qs = proof.q->value().get_str();
  put_u32v(o, std::uint32_t(qs.size()));
  o.insert(o.end(), qs.begin(), qs.end());
  put_u32v(o, proof.t);
  put_u32v(o, proof.ell);
  put_u32v(o, proof.m_out);
  put_u64v(o, proof.d);
  put_u32v(o, proof.k);
  put_u32v(o, proof.d_row);
  put_u32v(o, proof.d_sel);
  put_u64v(o, proof.commit_domain);
  put_u32v(o, proof.y_domain);
  put_u8(o, proof.flags);
  put_u32v(o, std::uint32_t(proof.pool_rows.size()));
  for (std::uint32_t r : proof.pool_rows) put_u32v(o, r);
  put_elems(o, proof.u_points);
  put_elems(o, proof.y_orig);
  put_elems(o, proof.y_prime);
  put_digest(o, proof.commitment.root);
  put_u64v(o, proof.commitment.domain_size);
  put_u32v(o, proof.commitment.y_domain);
  put_u8(o, proof.commitment.scheme_id);
  put_u32v(o, std::uint32_t(proof.rounds.size()));
  for (const auto& g : proof.rounds) put_poly(o, g);
  put_elems(o, proof.challenges);
  put_elem(o, proof.phi_final);
  put_u32v(o, std::uint32_t(proof.tuples.size()));
  for (const auto& t : proof.tuples) {
    put_elem(o, t.point);
    put_poly(o, t.slice);
    put_elem(o, t.phi_at);
    put_elem(o, t.delta_at);
  }
  put_u32v(o, std::uint32_t(proof.openings.size()));
  for (const auto& op : proof.openings) {
    put_u64v(o, op.index);
    put_elem(o, op.value);
    put_u32v(o, std::uint32_t(op.auth_path.size()));
    for (const auto& d : op.auth_path) put_digest(o, d);
  }
  if (proof.has_flag(ProofFlag::kWitness)) put_elems(o, proof.witness_evals);
  if (proof.has_flag(ProofFlag::kExplicitParts)) {
    put_poly(o, proof.explicit_parts->first);
    put_poly(o, proof.explicit_parts->second);
  }
  if (proof.has_flag(ProofFlag::kExplicitBasis)) {
    put_u32v(o, std::uint32_t(proof.basis_row_polys.size()));
    for (const auto& p : proof.basis_row_polys) put_poly(o, p);
    for (const auto& p : proof.basis_sel_polys) put_poly(o, p);
  }
  put_digest(o, proof.transcript_digest);
  return o;
}

ViolationProof parse_proof(const std::vector<std::uint8_t>& bytes) {
  Reader r{bytes};
  r.need(4);
  if (std::memcmp(bytes.data(), kProofMagic, 4) != 0) {
    throw Error(Errc::kProofMalformed, "bad proof magic");
  }
  r.pos = 4;
  if (r.u8() != 1) throw Error(Errc::kProofMalformed, "unsupported proof version");
  ViolationProof p;
  p.scheme_id = r.u8();
  std::uint32_t qlen = r.u32();
  r.need(qlen);
  std::string qs(bytes.begin() + r.pos, bytes.begin() + r.pos + qlen);
  r.pos += qlen;
  p.q = FieldModulus::from_decimal(qs);
  r.q = p.q;
  p.t = r.u32();
  p.ell = r.u32();
  p.m_out = r.u32();
  p.d = r.u64();
  p.k = r.u32();
  p.d_row = r.u32();
  p.d_sel = r.u32();
  p.commit_domain = r.u64();
  p.y_domain = r.u32();
  p.flags = r.u8();
  std::uint32_t npool = r.u32();
  if (npool > (1u << 20)) throw Error(Errc::kProofMalformed, "pool size");
  for (std::uint32_t i = 0; i < npool; ++i) p.pool_rows.push_back(r.u32());
  p.u_points = r.elems();
  p.y_orig = r.elems();
  p.y_prime = r.elems();
  p.commitment.root = r.digest();
  p.commitment.domain_size = r.u64();
  p.commitment.y_domain = r.u32();
  p.commitment.scheme_id = r.u8();
  std::uint32_t nrounds = r.u32();
  if (nrounds > 64) throw Error(Errc::kProofMalformed, "round count");
  for (std::uint32_t i = 0; i < nrounds; ++i) p.rounds.push_back(r.poly());
  p.challenges = r.elems();
  p.phi_final = r.elem();
  std::uint32_t ntup = r.u32();
  if (ntup > 4096) throw Error(Errc::kProofMalformed, "tuple count");
  for (std::uint32_t i = 0; i < ntup; ++i) {
    OpeningTuple t;
    t.point = r.elem();
    t.slice = r.poly();
    t.phi_at = r.elem();
    t.delta_at = r.elem();
    p.tuples.push_back(std::move(t));
  }
  std::uint32_t nopen = r.u32();
  if (nopen > 4096) throw Error(Errc::kProofMalformed, "opening count");
  for (std::uint32_t i = 0; i < nopen; ++i) {
    OpeningProof op;
    op.index = r.u64();
    op.value = r.elem();
    std::uint32_t plen = r.u32();
    if (plen > 64) throw Error(Errc::kProofMalformed, "path length");
    for (std::uint32_t j = 0; j < plen; ++j) op.auth_path.push_back(r.digest());
    p.openings.push_back(std::move(op));
  }
  if (p.has_flag(ProofFlag::kWitness)) p.witness_evals = r.elems();
  if (p.has_flag(ProofFlag::kExplicitParts)) {
    DensePoly pp = r.poly();
    DensePoly ss = r.poly();
    p.explicit_parts = std::make_pair(std::move(pp), std::move(ss));
  }
  if (p.has_flag(ProofFlag::kExplicitBasis)) {
    std::uint32_t kk = r.u32();
    if (kk > (1u << 16)) throw Error(Errc::kProofMalformed, "basis size");
    for (std::uint32_t i = 0; i < kk; ++i) p.basis_row_polys.push_back(r.poly());
    for (std::uint32_t i = 0; i < kk; ++i) p.basis_sel_polys.push_back(r.poly());
  }
  p.transcript_digest = r.digest();
  if (r.pos != bytes.size()) {
    throw Error(Errc::kProofMalformed, "trailing bytes in proof");
  }
  return p;
}

std::string proof_to_json(const ViolationProof& proof) {
  nlohmann::ordered_json j;
  j["scheme_id"] = "merkle_eval_v1";
  j["q"] = proof.q->value().get_str();
  j["t"] = proof.t;
  j["ell"] = proof.ell;
  j["m_out"] = proof.m_out;
  j["d"] = proof.d;
  j["k"] = proof.k;
  j["d_row"] = proof.d_row;
  j["d_sel"] = proof.d_sel;
  j["commit_domain"] = proof.commit_domain;
  j["y_domain"] = proof.y_domain;
  j["flags"] = proof.flags;
  j["pool_rows"] = proof.pool_rows;
  auto elems_json = [](const std::vector<FieldElement>& es) {
    nlohmann::ordered_json a = nlohmann::ordered_json::array();
    for (const auto& e : es) a.push_back(e.to_decimal());
    return a;
  };
  auto poly_json = [&elems_json](const DensePoly& p) {
    return elems_json(p.coeffs());
  };
  j["u_points"] = elems_json(proof.u_points);
  j["y_orig"] = elems_json(proof.y_orig);
  j["y_prime"] = elems_json(proof.y_prime);
  j["commitment_root"] = hex_digest(proof.commitment.root);
  nlohmann::ordered_json rounds = nlohmann::ordered_json::array();
  for (const auto& g : proof.rounds) rounds.push_back(poly_json(g));
  j["rounds"] = std::move(rounds);
  j["challenges"] = elems_json(proof.challenges);
  j["phi_final"] = proof.phi_final.to_decimal();
  nlohmann::ordered_json tuples = nlohmann::ordered_json::array();
  for (const auto& t : proof.tuples) {
    nlohmann::ordered_json tj;
    tj["point"] = t.point.to_decimal();
    tj["slice"] = poly_json(t.slice);
    tj["phi_at"] = t.phi_at.to_decimal();
    tj["delta_at"] = t.delta_at.to_decimal();
    tuples.push_back(std::move(tj));
  }
  j["tuples"] = std::move(tuples);
  nlohmann::ordered_json opens = nlohmann::ordered_json::array();
  for (const auto& op : proof.openings) {
    nlohmann::ordered_json oj;
    oj["index"] = op.index;
    oj["value"] = op.value.to_decimal();
    nlohmann::ordered_json path = nlohmann::ordered_json::array();
    for (const auto& d : op.auth_path) path.push_back(hex_digest(d));
    oj["path"] = std::move(path);
    opens.push_back(std::move(oj));
  }
  j["openings"] = std::move(opens);
  if (proof.has_flag(ProofFlag::kWitness)) {
    j["witness_evals"] = elems_json(proof.witness_evals);
  }
  if (proof.explicit_parts) {
    j["part_p"] = poly_json(proof.explicit_parts->first);
    j["part_s"] = poly_json(proof.explicit_parts->second);
  }
  if (proof.has_flag(ProofFlag::kExplicitBasis)) {
    nlohmann::ordered_json rp = nlohmann::ordered_json::array();
    for (const auto& b : proof.basis_row_polys) rp.push_back(poly_json(b));
    j["basis_row_polys"] = std::move(rp);
    nlohmann::ordered_json sp = nlohmann::ordered_json::array();
    for (const auto& b : proof.basis_sel_polys) sp.push_back(poly_json(b));
    j["basis_sel_polys"] = std::move(sp);
  }
  j["transcript_digest"] = hex_digest(proof.transcript_digest);
  return j.dump(2) + "\n";
}

}  // namespace zkcraft
