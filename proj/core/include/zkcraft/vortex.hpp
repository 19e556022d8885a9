#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "zkcraft/circuit.hpp"
#include "zkcraft/ff.hpp"
#include "zkcraft/sha256.hpp"

namespace zkcraft {

/// Interpolation anchors for the encoding. alpha and beta are pairwise
/// distinct and mutually disjoint, which requires q > 2k.
struct NodePlan {
  std::vector<FieldElement> alpha, beta;
  std::uint32_t d_row = 0;
  std::uint32_t d_sel = 0;

  std::uint32_t k() const { return std::uint32_t(alpha.size()); }
};

/// Deterministic scan: alpha = {1..k}, beta = {k+1..2k}. d_row defaults to
/// k-1 (the smallest degree that keeps delta recoverable from the X-part),
/// d_sel to k.
NodePlan choose_nodes(const FieldModulus* q, std::uint32_t k, std::uint32_t d_row = 0,
                      std::uint32_t d_sel = 0);

/// Block-diagonal [V_row 0; 0 V_sel] with (V_row)_{j,i} = alpha_i^j and
/// (V_sel)_{j,i} = beta_i^j (j = 0..k-1). det factors into the two
/// Vandermonde determinants and is nonzero for any valid plan.
struct BlockVandermonde {
  Matrix m;
  Matrix inverse;
  FieldElement det;
};

BlockVandermonde build_block_vandermonde(const NodePlan& plan);

/// R(X,Y) = sum_i delta_i row_i(X) + sum_i c_i sel_i(Y), split into the two
/// univariate parts. Every sel_i has a zero constant term so the split is
/// recoverable from evaluations.
struct RowVortexEncoding {
  std::vector<std::uint32_t> pool_rows;
  NodePlan plan;
  std::vector<DensePoly> row_polys;
  std::vector<DensePoly> sel_polys;
  std::vector<std::uint8_t> delta;
  std::vector<FieldElement> c;
  /// rho = M * (delta || c) + t with t = 0; the binding handle.
  std::vector<FieldElement> rho;

  DensePoly x_part() const;
  DensePoly y_part() const;
  FieldElement eval(const FieldElement& x, const FieldElement& y) const;
};

/// Row encoding derived from the R1CS: the row's coefficient stream
/// (concatenated sorted nonzeros of a_i, b_i, c_i), padded or compressed to
/// d_row+1 values with SHA-256-derived elements, interpolated on the first
/// d_row+1 alpha nodes.
std::vector<DensePoly> default_row_polys(const R1csInstance& inst,
                                         const std::vector<std::uint32_t>& pool_rows,
                                         const NodePlan& plan);

/// Slot isolators: unique degree <= k polynomials with sel_i(0) = 0 and
/// sel_i(beta_j) = [i == j].
std::vector<DensePoly> default_sel_polys(const NodePlan& plan);

RowVortexEncoding encode(const std::vector<std::uint32_t>& pool_rows,
                         const NodePlan& plan, const std::vector<std::uint8_t>& delta,
                         const std::vector<FieldElement>& c, const R1csInstance& inst);

/// Explicit-basis variant (degree-checked against the plan).
RowVortexEncoding encode_with_basis(const std::vector<std::uint32_t>& pool_rows,
                                    const NodePlan& plan,
                                    const std::vector<std::uint8_t>& delta,
                                    const std::vector<FieldElement>& c,
                                    std::vector<DensePoly> row_polys,
                                    std::vector<DensePoly> sel_polys);

constexpr std::uint8_t kSchemeMerkleEvalV1 = 1;

struct Commitment {
  Digest root{};
  std::uint64_t domain_size = 0;  // leaf count (power of two)
  std::uint32_t y_domain = 1;     // 1 = Y folded at a public point, else grid width
  std::uint8_t scheme_id = kSchemeMerkleEvalV1;

  bool operator==(const Commitment& o) const {
    return root == o.root && domain_size == o.domain_size && y_domain == o.y_domain &&
           scheme_id == o.scheme_id;
  }
};

struct OpeningProof {
  std::uint64_t index = 0;
  FieldElement value;
  std::vector<Digest> auth_path;
};

class MerkleTree {
 public:
  explicit MerkleTree(const std::vector<Digest>& leaves);
  const Digest& root() const { return levels_.back()[0]; }
  std::vector<Digest> path(std::uint64_t index) const;
  std::uint64_t leaf_count() const { return levels_[0].size(); }

 private:
  std::vector<std::vector<Digest>> levels_;
};

Digest merkle_leaf_hash(std::uint64_t index, const FieldElement& value);

/// Commitment plus the prover-side tree and leaf values.
struct CommittedEncoding {
  Commitment commitment;
  MerkleTree tree;
  std::vector<FieldElement> leaves;
};

/// Leaves are R(x, tau) for x = 0..domain_size-1 (tau a transcript-derived
/// public point). domain_size must be a power of two covering the X-degree.
CommittedEncoding commit(const RowVortexEncoding& enc, std::uint64_t domain_size,
                         const FieldElement& tau);

/// Grid variant for k > 8: leaves are R(x, y) over the x*y grid, index
/// x * y_domain + y.
CommittedEncoding commit_grid(const RowVortexEncoding& enc, std::uint64_t x_domain,
                              std::uint32_t y_domain);

OpeningProof open(const CommittedEncoding& ce, std::uint64_t index);
bool verify_opening(const Commitment& com, const OpeningProof& proof);

/// Solves the per-part coefficient systems for the basis coordinates
/// (delta_hat, c_hat) of a reconstructed (P, S) pair. Fails when the basis is
/// degenerate or the parts are outside its span.
struct SelectionCoords {
  std::vector<FieldElement> delta_coords;
  std::vector<FieldElement> c_coords;
};
std::optional<SelectionCoords> recover_selection_coords(
    const DensePoly& x_part, const DensePoly& y_part,
    const std::vector<DensePoly>& row_polys, const std::vector<DensePoly>& sel_polys);

}  // namespace zkcraft
