#include "zkcraft/vortex.hpp"

#include <algorithm>
#include <cstring>

namespace zkcraft {

NodePlan choose_nodes(const FieldModulus* q, std::uint32_t k, std::uint32_t d_row,
                      std::uint32_t d_sel) {
  if (k == 0) throw Error(Errc::kInvariantError, "pool size must be >= 1");
  if (q->value() <= 2 * mpz_class(k)) {
    throw Error(Errc::kFieldTooSmall,
                "field of size " + q->value().get_str() + " too small for k = " +
                    std::to_string(k) + " (need q > 2k)");
  }
  NodePlan plan;
  plan.alpha.reserve(k);
  plan.beta.reserve(k);
  for (std::uint32_t i = 1; i <= k; ++i) {
    plan.alpha.push_back(FieldElement::from_u64(i, q));
  }
  for (std::uint32_t i = k + 1; i <= 2 * k; ++i) {
    plan.beta.push_back(FieldElement::from_u64(i, q));
  }
  plan.d_row = d_row == 0 ? (k > 1 ? k - 1 : 1) : d_row;
  plan.d_sel = d_sel == 0 ? k : d_sel;
  return plan;
}

BlockVandermonde build_block_vandermonde(const NodePlan& plan) {
  std::uint32_t k = plan.k();
  const FieldModulus* q = plan.alpha[0].modulus();
  Matrix m(2 * k, std::vector<FieldElement>(2 * k, FieldElement::zero(q)));
  for (std::uint32_t j = 0; j < k; ++j) {
    for (std::uint32_t i = 0; i < k; ++i) {
      m[j][i] = plan.alpha[i].pow(j);
      m[k + j][k + i] = plan.beta[i].pow(j);
    }
  }
  BlockVandermonde out;
  out.det = FieldElement::one(q);
  for (std::uint32_t i = 0; i < k; ++i) {
    for (std::uint32_t j = i + 1; j < k; ++j) {
      out.det *= plan.alpha[j] - plan.alpha[i];
      out.det *= plan.beta[j] - plan.beta[i];
    }
  }
  if (out.det.is_zero()) {
    throw Error(Errc::kSingularMatrix, "repeated nodes in plan");
  }
  out.inverse = mat_inverse(m);
  out.m = std::move(m);
  return out;
}

DensePoly RowVortexEncoding::x_part() const {
  const FieldModulus* q = plan.alpha[0].modulus();
  DensePoly p = DensePoly::zero(q);
  for (std::size_t i = 0; i < row_polys.size(); ++i) {
    if (delta[i]) p = p + row_polys[i];
  }
  return p;
}

DensePoly RowVortexEncoding::y_part() const {
  const FieldModulus* q = plan.alpha[0].modulus();
  DensePoly p = DensePoly::zero(q);
  for (std::size_t i = 0; i < sel_polys.size(); ++i) {
    if (!c[i].is_zero()) p = p + sel_polys[i].scale(c[i]);
  }
  return p;
}

FieldElement RowVortexEncoding::eval(const FieldElement& x, const FieldElement& y) const {
  return x_part().eval(x) + y_part().eval(y);
}

namespace {

FieldElement hash_derived_element(const std::vector<std::uint8_t>& seed,
                                  const char* tag, std::uint64_t counter,
                                  const FieldModulus* q) {
  // Rejection-sampled reduction keeps the output uniform.
  for (std::uint64_t attempt = 0;; ++attempt) {
    Sha256 h;
    h.update(seed);
    h.update(tag, std::strlen(tag));
    std::uint8_t ctr[16];
    for (int i = 0; i < 8; ++i) ctr[i] = std::uint8_t(counter >> (8 * i));
    for (int i = 0; i < 8; ++i) ctr[8 + i] = std::uint8_t(attempt >> (8 * i));
    h.update(ctr, 16);
    Digest d = h.finish();
    mpz_class x;
    mpz_import(x.get_mpz_t(), d.size(), 1, 1, 0, 0, d.data());
    mpz_class bound;
    mpz_ui_pow_ui(bound.get_mpz_t(), 2, 256);
    mpz_class limit = (bound / q->value()) * q->value();
    if (x < limit) return FieldElement(x % q->value(), q);
  }
}

std::vector<std::uint8_t> canonical_row_bytes(const ConstraintRow& r) {
  std::vector<std::uint8_t> bytes;
  auto append_vec = [&](const SparseVec& v, std::uint8_t tag) {
    bytes.push_back(tag);
    for (const auto& t : v) {
      for (int i = 0; i < 8; ++i) {
        bytes.push_back(std::uint8_t(std::uint64_t(t.index) >> (8 * i)));
      }
      t.coeff.append_bytes(bytes);
    }
  };
  append_vec(r.a, 0xA1);
  append_vec(r.b, 0xB1);
  append_vec(r.c, 0xC1);
  return bytes;
}

}  // namespace

std::vector<DensePoly> default_row_polys(const R1csInstance& inst,
                                         const std::vector<std::uint32_t>& pool_rows,
                                         const NodePlan& plan) {
  const FieldModulus* q = inst.modulus();
  std::size_t stream_len = plan.d_row + 1;
  std::vector<DensePoly> out;
  out.reserve(pool_rows.size());
  for (std::uint32_t ri : pool_rows) {
    const ConstraintRow& row = inst.row(ri);
    std::vector<FieldElement> stream;
    for (const SparseVec* v : {&row.a, &row.b, &row.c}) {
      for (const auto& t : *v) stream.push_back(t.coeff);
    }
    std::vector<std::uint8_t> seed = canonical_row_bytes(row);
    if (stream.size() > stream_len) {
      // Compress the tail into one hash-derived element.
      std::vector<FieldElement> head(stream.begin(), stream.begin() + (stream_len - 1));
      head.push_back(hash_derived_element(seed, "tail", 0, q));
      stream = std::move(head);
    }
    std::uint64_t pad_ctr = 1;
    while (stream.size() < stream_len) {
      stream.push_back(hash_derived_element(seed, "pad", pad_ctr++, q));
    }
    std::vector<std::pair<FieldElement, FieldElement>> pts;
    for (std::size_t j = 0; j < stream_len; ++j) {
      // Nodes beyond the plan's k (when d_row >= k) continue the scan.
      FieldElement node = j < plan.alpha.size()
                              ? plan.alpha[j]
                              : FieldElement::from_u64(std::uint64_t(j) + 1, q);
      pts.emplace_back(node, stream[j]);
    }
    out.push_back(lagrange_interpolate(pts));
  }
  return out;
}

std::vector<DensePoly> default_sel_polys(const NodePlan& plan) {
  const FieldModulus* q = plan.beta[0].modulus();
  std::uint32_t k = plan.k();
  std::vector<DensePoly> out;
  out.reserve(k);
  for (std::uint32_t i = 0; i < k; ++i) {
    std::vector<std::pair<FieldElement, FieldElement>> pts;
    pts.emplace_back(FieldElement::zero(q), FieldElement::zero(q));
    for (std::uint32_t j = 0; j < k; ++j) {
      pts.emplace_back(plan.beta[j],
                       i == j ? FieldElement::one(q) : FieldElement::zero(q));
    }
    out.push_back(lagrange_interpolate(pts));
  }
  return out;
}

namespace {

RowVortexEncoding finish_encoding(const std::vector<std::uint32_t>& pool_rows,
                                  const NodePlan& plan,
                                  const std::vector<std::uint8_t>& delta,
                                  const std::vector<FieldElement>& c,
                                  std::vector<DensePoly> row_polys,
                                  std::vector<DensePoly> sel_polys) {
  std::uint32_t k = plan.k();
  if (pool_rows.size() != k || delta.size() != k || c.size() != k) {
    throw Error(Errc::kShapeMismatch, "encode: |pool| = |delta| = |c| = k required");
  }
  const FieldModulus* q = plan.alpha[0].modulus();
  for (const auto& p : row_polys) {
    if (p.degree() > int(plan.d_row)) {
      throw Error(Errc::kDegreeBudgetExceeded, "row polynomial exceeds d_row");
    }
  }
  for (const auto& p : sel_polys) {
    if (p.degree() > int(plan.d_sel)) {
      throw Error(Errc::kDegreeBudgetExceeded, "sel polynomial exceeds d_sel");
    }
    if (!p.coeff(0).is_zero()) {
      throw Error(Errc::kInvariantError, "sel polynomial must have zero constant term");
    }
  }
  for (std::uint8_t d : delta) {
    if (d > 1) throw Error(Errc::kInvariantError, "delta entries must be bits");
  }

  RowVortexEncoding enc;
  enc.pool_rows = pool_rows;
  enc.plan = plan;
  enc.row_polys = std::move(row_polys);
  enc.sel_polys = std::move(sel_polys);
  enc.delta = delta;
  enc.c = c;

  BlockVandermonde bv = build_block_vandermonde(plan);
  std::vector<FieldElement> dc;
  dc.reserve(2 * k);
  for (std::uint8_t d : delta) dc.push_back(FieldElement::from_u64(d, q));
  for (const auto& ci : c) dc.push_back(ci);
  enc.rho = mat_vec(bv.m, dc);  // offset t is fixed to zero
  return enc;
}

}  // namespace

RowVortexEncoding encode(const std::vector<std::uint32_t>& pool_rows,
                         const NodePlan& plan, const std::vector<std::uint8_t>& delta,
                         const std::vector<FieldElement>& c, const R1csInstance& inst) {
  return finish_encoding(pool_rows, plan, delta, c,
                         default_row_polys(inst, pool_rows, plan),
                         default_sel_polys(plan));
}

RowVortexEncoding encode_with_basis(const std::vector<std::uint32_t>& pool_rows,
                                    const NodePlan& plan,
                                    const std::vector<std::uint8_t>& delta,
                                    const std::vector<FieldElement>& c,
                                    std::vector<DensePoly> row_polys,
                                    std::vector<DensePoly> sel_polys) {
  if (row_polys.size() != plan.k() || sel_polys.size() != plan.k()) {
    throw Error(Errc::kShapeMismatch, "basis size != k");
  }
  return finish_encoding(pool_rows, plan, delta, c, std::move(row_polys),
                         std::move(sel_polys));
}

Digest merkle_leaf_hash(std::uint64_t index, const FieldElement& value) {
  Sha256 h;
  std::uint8_t idx[8];
  for (int i = 0; i < 8; ++i) idx[i] = std::uint8_t(index >> (8 * i));
  h.update(idx, 8);
  std::vector<std::uint8_t> vb = value.to_bytes();
  h.update(vb);
  return h.finish();
}

MerkleTree::MerkleTree(const std::vector<Digest>& leaves) {
  if (leaves.empty() || (leaves.size() & (leaves.size() - 1)) != 0) {
    throw Error(Errc::kInvariantError, "merkle leaf count must be a power of two");
  }
  levels_.push_back(leaves);
  while (levels_.back().size() > 1) {
    const auto& prev = levels_.back();
    std::vector<Digest> next(prev.size() / 2);
    for (std::size_t i = 0; i < next.size(); ++i) {
      Sha256 h;
      h.update(prev[2 * i].data(), prev[2 * i].size());
      h.update(prev[2 * i + 1].data(), prev[2 * i + 1].size());
      next[i] = h.finish();
    }
    levels_.push_back(std::move(next));
  }
}

std::vector<Digest> MerkleTree::path(std::uint64_t index) const {
  if (index >= levels_[0].size()) {
    throw Error(Errc::kPointOutsideDomain, "merkle index outside domain");
  }
  std::vector<Digest> out;
  std::uint64_t idx = index;
  for (std::size_t lvl = 0; lvl + 1 < levels_.size(); ++lvl) {
    out.push_back(levels_[lvl][idx ^ 1]);
    idx >>= 1;
  }
  return out;
}

CommittedEncoding commit(const RowVortexEncoding& enc, std::uint64_t domain_size,
                         const FieldElement& tau) {
  if (domain_size == 0 || (domain_size & (domain_size - 1)) != 0) {
    throw Error(Errc::kInvariantError, "domain size must be a power of two");
  }
  DensePoly px = enc.x_part();
  if (domain_size < std::uint64_t(px.degree() < 0 ? 0 : px.degree()) + 1) {
    throw Error(Errc::kDomainTooSmall, "commit domain below degree bound");
  }
  const FieldModulus* q = enc.plan.alpha[0].modulus();
  FieldElement y_at_tau = enc.y_part().eval(tau);
  std::vector<FieldElement> leaves;
  leaves.reserve(domain_size);
  std::vector<Digest> hashes;
  hashes.reserve(domain_size);
  for (std::uint64_t x = 0; x < domain_size; ++x) {
    FieldElement v = px.eval(FieldElement::from_u64(x, q)) + y_at_tau;
    hashes.push_back(merkle_leaf_hash(x, v));
    leaves.push_back(std::move(v));
  }
  MerkleTree tree(hashes);
  Commitment com;
  com.root = tree.root();
  com.domain_size = domain_size;
  com.y_domain = 1;
  com.scheme_id = kSchemeMerkleEvalV1;
  return CommittedEncoding{com, std::move(tree), std::move(leaves)};
}

CommittedEncoding commit_grid(const RowVortexEncoding& enc, std::uint64_t x_domain,
                              std::uint32_t y_domain) {
  if (x_domain == 0 || (x_domain & (x_domain - 1)) != 0 || y_domain == 0 ||
      (y_domain & (y_domain - 1)) != 0) {
    throw Error(Errc::kInvariantError, "grid dimensions must be powers of two");
  }
  DensePoly px = enc.x_part();
  DensePoly py = enc.y_part();
  if (x_domain < std::uint64_t(std::max(px.degree(), 0)) + 1 ||
      y_domain < std::uint64_t(std::max(py.degree(), 0)) + 1) {
    throw Error(Errc::kDomainTooSmall, "grid below degree bound");
  }
  const FieldModulus* q = enc.plan.alpha[0].modulus();
  std::vector<FieldElement> leaves;
  std::vector<Digest> hashes;
  leaves.reserve(x_domain * y_domain);
  hashes.reserve(x_domain * y_domain);
  for (std::uint64_t x = 0; x < x_domain; ++x) {
    FieldElement xv = px.eval(FieldElement::from_u64(x, q));
    for (std::uint32_t y = 0; y < y_domain; ++y) {
      FieldElement v = xv + py.eval(FieldElement::from_u64(y, q));
      std::uint64_t idx = x * y_domain + y;
      hashes.push_back(merkle_leaf_hash(idx, v));
      leaves.push_back(std::move(v));
    }
  }
  MerkleTree tree(hashes);
  Commitment com;
  com.root = tree.root();
  com.domain_size = x_domain * y_domain;
  com.y_domain = y_domain;
  com.scheme_id = kSchemeMerkleEvalV1;
  return CommittedEncoding{com, std::move(tree), std::move(leaves)};
}

OpeningProof open(const CommittedEncoding& ce, std::uint64_t index) {
  if (index >= ce.commitment.domain_size) {
    throw Error(Errc::kPointOutsideDomain, "opening index outside domain");
  }
  OpeningProof p;
  p.index = index;
  p.value = ce.leaves[index];
  p.auth_path = ce.tree.path(index);
  return p;
}

bool verify_opening(const Commitment& com, const OpeningProof& proof) {
  if (proof.index >= com.domain_size) return false;
  std::uint64_t expected_len = 0;
  for (std::uint64_t s = com.domain_size; s > 1; s >>= 1) ++expected_len;
  if (proof.auth_path.size() != expected_len) return false;
  Digest h = merkle_leaf_hash(proof.index, proof.value);
  std::uint64_t idx = proof.index;
  for (const Digest& sib : proof.auth_path) {
    Sha256 hasher;
    if (idx & 1) {
      hasher.update(sib.data(), sib.size());
      hasher.update(h.data(), h.size());
    } else {
      hasher.update(h.data(), h.size());
      hasher.update(sib.data(), sib.size());
    }
    h = hasher.finish();
    idx >>= 1;
  }
  return h == com.root;
}

std::optional<SelectionCoords> recover_selection_coords(
    const DensePoly& x_part, const DensePoly& y_part,
    const std::vector<DensePoly>& row_polys, const std::vector<DensePoly>& sel_polys) {
  if (row_polys.empty() || sel_polys.size() != row_polys.size()) return std::nullopt;
  const FieldModulus* q = row_polys[0].modulus();
  std::size_t k = row_polys.size();

  auto solve_part = [&](const DensePoly& part, const std::vector<DensePoly>& basis)
      -> std::optional<std::vector<FieldElement>> {
    int max_deg = part.degree();
    for (const auto& b : basis) max_deg = std::max(max_deg, b.degree());
    std::size_t nrows = max_deg < 0 ? 1 : std::size_t(max_deg) + 1;
    Matrix m(nrows, std::vector<FieldElement>(k, FieldElement::zero(q)));
    std::vector<FieldElement> rhs(nrows, FieldElement::zero(q));
    for (std::size_t r = 0; r < nrows; ++r) {
      for (std::size_t i = 0; i < k; ++i) m[r][i] = basis[i].coeff(r);
      rhs[r] = part.coeff(r);
    }
    LinearSolveResult res = solve_linear(m, rhs);
    if (res.kind != LinearSolveResult::Kind::kUnique) return std::nullopt;
    return res.solution;
  };

  auto d = solve_part(x_part, row_polys);
  if (!d) return std::nullopt;
  auto c = solve_part(y_part, sel_polys);
  if (!c) return std::nullopt;
  return SelectionCoords{std::move(*d), std::move(*c)};
}

}  // namespace zkcraft
