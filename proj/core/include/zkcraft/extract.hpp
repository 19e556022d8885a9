#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "zkcraft/circuit.hpp"
#include "zkcraft/viop.hpp"
#include "zkcraft/vortex.hpp"

namespace zkcraft {

enum class WitnessSource { kInterpolatedWitness, kLinearReconstruction };

struct RecoveredEdit {
  std::vector<std::uint8_t> delta;
  std::vector<FieldElement> c;
  WitnessSource source = WitnessSource::kLinearReconstruction;
};

/// Reassembles rho from the proof's opened slices (or explicit coefficient
/// list), applies the inverse affine map, and lifts the selection bits.
/// The proof must have been accepted; extraction from a rejected proof is a
/// hard error, never a silent fallback.
RecoveredEdit extract_selection(const ViolationProof& proof, const R1csInstance& inst,
                                const NodePlan& plan, const BlockVandermonde& block,
                                const VerifyOutcome& outcome);

/// Reads the attached witness (evaluation basis on {0..n-1}); absent when the
/// prover did not append it. Throws DegreeOverflow when the attachment is too
/// long for the instance.
std::optional<Witness> interpolate_witness(const ViolationProof& proof,
                                           const R1csInstance& inst,
                                           const VerifyOutcome& outcome);

struct ReconstructionResult {
  Witness witness;
  bool underdetermined = false;
  /// Wires resolved to the canonical zero assignment.
  std::vector<std::uint32_t> free_vars;
};

/// Substitutes the edit into the constraint system and solves for a witness:
/// forward substitution in topological row order where possible, then a
/// linear solve over whatever remains. `pinned` fixes wires up front
/// (typically the public/private inputs of the trace being reconstructed).
ReconstructionResult reconstruct_witness(
    const R1csInstance& inst, const std::vector<std::uint32_t>& pool_rows,
    const RecoveredEdit& edit,
    const std::map<std::uint32_t, FieldElement>& pinned = {});

struct Counterexample {
  RecoveredEdit edit;
  Witness w_prime;
  ExecutionTrace trace;
  std::vector<FieldElement> y_orig;
  std::string mutated_source;
  bool replayed = false;
  bool underdetermined = false;
};

/// Partitions the witness into the trace and pairs it with the mutated
/// source (empty when no program text is available). The edited-system TCCT
/// predicate is asserted; violating it means the proof pipeline is broken.
Counterexample assemble_counterexample(const R1csInstance& inst,
                                       const std::vector<std::uint32_t>& pool_rows,
                                       const RecoveredEdit& edit, const Witness& w_prime,
                                       const std::vector<FieldElement>& y_orig,
                                       std::string mutated_source = "");

std::string counterexample_to_json(const Counterexample& cex);

}  // namespace zkcraft
