#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "zkcraft/extract.hpp"
#include "zkcraft/ff.hpp"

namespace zkcraft {

/// Canonical template form: comments stripped, blank lines dropped, space
/// runs collapsed, line ends trimmed, decimal literals minimized.
std::string canonicalize(const std::string& template_text);

/// Trunc64(SHA256(canonical text)), big-endian.
std::uint64_t template_fingerprint(const std::string& canonical_text);

enum class OracleKind { kBuiltin, kSubprocess, kHttp };

struct OracleConfig {
  OracleKind kind = OracleKind::kBuiltin;
  std::string target;  // command line or URL
  std::uint64_t seed = 0;
};

enum class Provenance { kBuiltin, kExternal };

struct TemplateBatch {
  std::string site_id;
  std::vector<std::string> candidates;  // RHS expressions, deduplicated
  Provenance provenance = Provenance::kBuiltin;
  std::string tool_id;
  std::vector<std::uint64_t> fingerprints;
  /// Candidates dropped by validation/dedup, with reasons (for the manifest).
  std::vector<std::string> rejected;
  bool external_failed = false;
};

/// The fixed Mutation-Oracle prompt with <WEAK_ASSIGN> substituted.
std::string mutation_prompt(const std::string& weak_assign);

/// Builtin batch: {0, q-1, 1, 2, 10} as literals. An external generator, when
/// configured, is invoked with the fixed prompt; its output is canonicalized,
/// deduplicated by fingerprint, and parse-validated. Any failure falls back
/// to the builtin batch.
TemplateBatch mutation_templates(const std::string& site_id,
                                 const std::string& weak_assign_text,
                                 const FieldModulus* q,
                                 const OracleConfig& cfg = {});

struct BiasEntry {
  FieldElement value;
  std::uint32_t weight;  // integral weights, normalized at use
};

struct SamplerSpec {
  std::string trigger_description;
  std::uint64_t seed = 0;
  /// One bias list per input coordinate; an empty list means uniform.
  std::vector<std::vector<BiasEntry>> per_input_bias;
};

/// The fixed Pattern-Oracle prompt with <COUNTEREXAMPLE> substituted.
std::string pattern_prompt(const std::string& counterexample_json);

/// Builtin: weight 8/16 on the exact counterexample coordinate, 2/16 on each
/// neighbor, the remaining 4/16 uniform. External generators supply a
/// declarative bias list over the same adapter; failures degrade to uniform.
SamplerSpec pattern_sampler(const Counterexample& cex, const FieldModulus* q,
                            const OracleConfig& cfg = {});

/// Deterministic PRF: SHA256(LE64(seed) || site_id) reduced mod q with
/// rejection sampling.
FieldElement seeded_fallback_constant(std::uint64_t seed, const std::string& site_id,
                                      const FieldModulus* q);

/// Draws one value from a bias list (uniform when empty) using the next
/// PRF values from a counter stream.
FieldElement sample_biased(const std::vector<BiasEntry>& bias, std::uint64_t seed,
                           std::uint64_t counter, const FieldModulus* q);

/// Adapter entry points, exposed for testing. Both return the raw response
/// text or nullopt on failure.
std::optional<std::string> invoke_subprocess_oracle(const std::string& command,
                                                    const std::string& prompt);
std::optional<std::string> invoke_http_oracle(const std::string& url,
                                              const std::string& prompt,
                                              std::uint32_t max_candidates);

}  // namespace zkcraft
