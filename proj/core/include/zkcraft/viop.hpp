#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "zkcraft/circuit.hpp"
#include "zkcraft/ff.hpp"
#include "zkcraft/sha256.hpp"
#include "zkcraft/vortex.hpp"

namespace zkcraft {

/// Fiat-Shamir transcript: a SHA-256 chain with labeled absorption and
/// rejection-sampled field challenges (no modulo bias).
class Transcript {
 public:
  void absorb(std::string_view label, const void* data, std::size_t len);
  void absorb(std::string_view label, const std::vector<std::uint8_t>& v) {
    absorb(label, v.data(), v.size());
  }
  void absorb_u64(std::string_view label, std::uint64_t v);
  void absorb_element(std::string_view label, const FieldElement& e);
  void absorb_elements(std::string_view label, const std::vector<FieldElement>& es);
  void absorb_poly(std::string_view label, const DensePoly& p);

  FieldElement challenge_field(std::string_view label, const FieldModulus* q);
  std::uint64_t challenge_u64(std::string_view label);

  const Digest& state() const { return state_; }

 private:
  Digest state_{};
};

struct IopConfig {
  std::uint32_t domain_log = 1;      // t; |D| = 2^t
  std::uint32_t security_bits = 128; // recorded target
  std::uint32_t repetitions = 2;     // ell >= 1 opening / challenge points
  std::vector<FieldElement> output_points;  // u_j, pairwise distinct
  std::uint64_t commit_domain = 0;   // 0 = smallest power of two covering the degree
  bool grid_commit = false;

  /// domain_log from the constraint count, u_points 0..m_out-1.
  static IopConfig defaults_for(const R1csInstance& inst, std::uint32_t ell = 2);
};

struct DeltaOut {
  DensePoly poly;
  std::vector<FieldElement> y_prime, y_orig;
};

/// Lagrange combination sum_j (y'_j - y_j) L_j(X) over the output points.
/// Identically zero exactly when y' == y.
DeltaOut build_delta_out(const std::vector<FieldElement>& y_prime,
                         const std::vector<FieldElement>& y_orig,
                         const std::vector<FieldElement>& u_points);

/// Edited-residual table over the Sum-Check domain: entry U < m is the residual
/// of row U under the encoding's (delta, c) edit, entries >= m are zero.
struct PhiR {
  std::vector<FieldElement> evals;   // size 2^t
  std::uint64_t degree_bound = 0;    // d = 2n + k - 1
};

PhiR build_phi(const R1csInstance& inst, const RowVortexEncoding& enc,
               const Witness& w_prime, const IopConfig& cfg);

/// Univariate low-degree extension of the table on nodes {0..|D|-1}.
DensePoly phi_univariate(const PhiR& phi, const FieldModulus* q);

struct OpeningTuple {
  FieldElement point;    // challenge xi_j
  DensePoly slice;       // R(xi_j, Y)
  FieldElement phi_at;   // Phi^(xi_j), univariate extension
  FieldElement delta_at; // Delta_out(xi_j)
};

enum class ProofFlag : std::uint8_t {
  kWitness = 1,        // witness values present (evaluation basis on 0..n-1)
  kExplicitParts = 2,  // full (P, S) coefficient lists present
  kExplicitBasis = 4,  // row/sel basis polynomials embedded (not derivable)
  kGridCommit = 8,
};

struct ViolationProof {
  std::uint8_t scheme_id = kSchemeMerkleEvalV1;
  const FieldModulus* q = nullptr;
  std::uint32_t t = 0;
  std::uint32_t ell = 0;
  std::uint32_t m_out = 0;
  std::uint64_t d = 0;  // 2n + k - 1
  std::uint32_t k = 0;
  std::uint32_t d_row = 0;
  std::uint32_t d_sel = 0;
  std::uint64_t commit_domain = 0;
  std::uint32_t y_domain = 1;
  std::uint8_t flags = 0;

  std::vector<std::uint32_t> pool_rows;
  std::vector<FieldElement> u_points;
  std::vector<FieldElement> y_orig;
  std::vector<FieldElement> y_prime;

  Commitment commitment;
  std::vector<DensePoly> rounds;           // g_1..g_t
  std::vector<FieldElement> challenges;    // zeta_1..zeta_t
  FieldElement phi_final;                  // MLE of the residual table at zeta
  std::vector<OpeningTuple> tuples;        // ell scheduled + bounded retries
  std::vector<OpeningProof> openings;      // Merkle spot checks

  std::vector<FieldElement> witness_evals;            // optional (kWitness)
  std::optional<std::pair<DensePoly, DensePoly>> explicit_parts;  // (P, S)
  std::vector<DensePoly> basis_row_polys;  // optional (kExplicitBasis)
  std::vector<DensePoly> basis_sel_polys;

  Digest transcript_digest{};

  bool has_flag(ProofFlag f) const { return flags & std::uint8_t(f); }
};

/// Retries appended to the scheduled tuples when every scheduled divergence
/// sample lands on a root of Delta_out (possible at toy field sizes). Bounded,
/// transcript-forced, and only legal while all earlier samples are zero.
/// Disabled at ell = 1, where divergence must show at the first challenge.
constexpr std::uint32_t kMaxDivergenceRetries = 16;

struct ProveOptions {
  bool attach_witness = false;
  /// Explicit basis (toy / externally fixed encodings). Embedded in the proof.
  std::optional<std::pair<std::vector<DensePoly>, std::vector<DensePoly>>> basis;
};

ViolationProof prove(const R1csInstance& inst, const std::vector<std::uint32_t>& pool_rows,
                     const NodePlan& plan, const std::vector<std::uint8_t>& delta,
                     const std::vector<FieldElement>& c, const Witness& w_prime,
                     const std::vector<FieldElement>& y_orig, const IopConfig& cfg,
                     const ProveOptions& opts = {});

enum class RejectReason {
  kNone,
  kMalformed,
  kTranscriptMismatch,
  kRoundInconsistent,
  kOpeningInvalid,
  kFinalEvalMismatch,
  kNoDivergence,
};

const char* reject_reason_name(RejectReason r);

struct VerifyOutcome {
  bool accepted = false;
  RejectReason reason = RejectReason::kNone;
  /// Which concrete check fired, e.g. "phi_nonzero_at_challenge".
  std::string detail;
};

VerifyOutcome verify(const ViolationProof& proof, const R1csInstance& inst,
                     const std::vector<std::uint32_t>& pool_rows, const NodePlan& plan,
                     const std::vector<FieldElement>& y_orig, const IopConfig& cfg);

struct KnowledgeErrorBound {
  mpq_class linear;       // (m_out - 1 + ell d) / q
  mpq_class exponential;  // ((m_out - 1 + d) / q)^ell
};

KnowledgeErrorBound knowledge_error_bound(const FieldModulus* q, std::uint32_t m_out,
                                          std::uint64_t d, std::uint32_t ell);

std::vector<std::uint8_t> serialize_proof(const ViolationProof& proof);
ViolationProof parse_proof(const std::vector<std::uint8_t>& bytes);
std::string proof_to_json(const ViolationProof& proof);

/// Reconstructs the committed bivariate object (P, S) from the proof body:
/// explicit parts when present, otherwise per-Y-slot interpolation across the
/// opened slices (needs at least d_row+1 of them). Returns nullopt when the
/// proof is internally inconsistent.
std::optional<std::pair<DensePoly, DensePoly>> reconstruct_parts(
    const ViolationProof& proof);

/// The proof's encoding basis: embedded when kExplicitBasis, otherwise the
/// default derivation from the instance.
std::pair<std::vector<DensePoly>, std::vector<DensePoly>> proof_basis(
    const ViolationProof& proof, const R1csInstance& inst, const NodePlan& plan);

}  // namespace zkcraft
