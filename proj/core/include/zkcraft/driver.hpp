#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "zkcraft/circuit.hpp"
#include "zkcraft/extract.hpp"
#include "zkcraft/oracle.hpp"
#include "zkcraft/slicer.hpp"
#include "zkcraft/synth.hpp"
#include "zkcraft/viop.hpp"
#include "zkcraft/vortex.hpp"

namespace zkcraft {

struct BackendProfile {
  std::string id;
  std::uint64_t d_max;
  std::uint64_t domain_max;
  std::uint32_t fold_rounds;  // recorded only, never executed as recursion
  std::string opening_size_note;
};

/// Preference order: tighter envelope first.
std::vector<BackendProfile> default_backend_profiles();

enum class FallbackReason { kNone, kDegExceeded, kDomainExceeded, kCryptoUnavailable };
const char* fallback_reason_name(FallbackReason r);

struct BackendDecision {
  bool zk_native = false;
  BackendProfile profile;
  FallbackReason reason = FallbackReason::kNone;
};

/// First profile with d <= d_max and domain <= domain_max wins; otherwise the
/// reason reports which limit fired first against the widest profile.
BackendDecision select_backend(std::uint64_t d, std::uint64_t domain,
                               const std::vector<BackendProfile>& profiles);

struct SearchBudget {
  std::uint32_t t_max = 3;
  std::uint32_t k = 0;
  std::uint64_t max_calls = 0;

  static SearchBudget compute(std::uint32_t k, std::uint32_t t_max);
};

struct DriverConfig {
  SlicerConfig slicer;
  std::uint32_t t_max = 3;
  std::uint32_t ell = 2;
  std::uint32_t security_bits = 128;
  bool attach_witness = false;
  bool confirm_replay = false;
  bool emit_smt2 = false;
  bool find_all = false;
  /// Algebraic per-site refinement of candidate constants (probing the
  /// violated residual as a low-degree polynomial in the constant).
  bool enable_site_solve = true;
  std::string backend = "auto";  // auto | basefold | hyperplonk
  OracleConfig oracle;
  std::uint64_t seed = 0;
  std::uint32_t workers = 1;
  /// Inputs are enumerated exhaustively when the whole input space is at most
  /// this large; otherwise sampling around the original assignment.
  std::uint64_t exhaustive_cap = 1 << 14;
  std::uint32_t sample_cap = 64;
  std::string out_dir;
  std::string circuit_name = "circuit";
  bool force_crypto_unavailable = false;  // startup self-test hook
  std::optional<double> gamma, gamma_star;  // relative-completeness report
};

struct TemplateLogEntry {
  std::string site_id;
  TemplateBatch batch;
};

struct RunManifest {
  std::string schema_version = "zkcraft-manifest-v1";
  std::string backend_id;
  std::uint64_t phi_degree = 0;   // decision-time deg(Phi_R)
  std::uint64_t domain_size = 0;  // decision-time |D|
  FallbackReason fallback_reason = FallbackReason::kNone;
  // node plan
  std::vector<std::string> alpha, beta;
  std::uint32_t d_row = 0, d_sel = 0;
  std::string t_offset = "0";
  std::string k_partition = "one,pub_in,pub_out";
  // slicer
  std::string score_convention;
  std::string lambda, mu;
  std::uint32_t pool_size = 0;
  std::vector<std::uint32_t> pool_rows;
  std::uint32_t t_max = 0;
  // oracle
  std::string oracle_kind;
  std::string oracle_target;
  std::uint64_t oracle_seed = 0;
  std::vector<TemplateLogEntry> template_log;
  // iop
  std::uint32_t ell = 0;
  std::uint32_t security_bits = 0;
  std::string knowledge_error_linear;
  std::string knowledge_error_exponential;
  std::string scheme_id = "merkle_eval_v1";
  // run
  std::uint64_t seed = 0;
  std::uint32_t workers = 1;
  std::uint64_t subset_evaluations = 0;
  std::uint64_t max_calls = 0;
  std::uint64_t candidates_tried = 0;
  bool found = false;
  bool budget_exhausted = false;
  std::string proof_file, counterexample_file, mutated_file, timings_file;
  // greedy cover fallback
  bool greedy_cover_attempted = false;
  std::uint32_t greedy_cover_size = 0;
  std::string greedy_cover_bound;  // "<= 2 t*"
  std::optional<std::string> epsilon;  // exp(-2k (gamma-gamma*)^2) when supplied
};

std::string manifest_to_json(const RunManifest& m);
void write_manifest(const RunManifest& m, const std::string& path);

struct CandidateTriple {
  std::vector<std::uint32_t> rows;      // selected pool rows
  std::vector<FieldElement> constants;  // aligned with rows
  std::map<std::uint32_t, FieldElement> inputs;
  Witness w_prime;
  std::vector<FieldElement> y_prime;
};

struct SearchStats {
  std::uint64_t subset_evaluations = 0;
  std::uint64_t candidates_tried = 0;
  bool budget_exhausted = false;
};

/// Bounded enumeration over (subset, template-constant assignment, inputs).
/// Invokes sink for every triple that satisfies the edited system with
/// diverging outputs; stops when sink returns false or the subset budget is
/// spent. Deterministic lexicographic order throughout.
SearchStats fallback_search(const R1csInstance& inst, const CandidatePool& pool,
                            const SearchBudget& budget,
                            const std::vector<TemplateLogEntry>& oracle_batches,
                            const Witness& original, const DriverConfig& cfg,
                            const std::function<bool(const CandidateTriple&)>& sink);

struct RunResult {
  std::optional<Counterexample> counterexample;
  std::optional<ViolationProof> proof;
  std::vector<Counterexample> all_counterexamples;  // when find_all
  RunManifest manifest;
  int exit_code = 1;  // 0 found, 1 none, 2 error (CLI convention)
};

RunResult run_pipeline(const R1csInstance& inst,
                       const std::optional<std::string>& program_text,
                       const Witness& original_witness, const DriverConfig& cfg);

}  // namespace zkcraft
