#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "zkcraft/ff.hpp"

namespace zkcraft {

enum class VarClass : std::uint8_t {
  kOne,
  kPublicInput,
  kPublicOutput,
  kPrivateInput,
  kIntermediate,
};

const char* var_class_name(VarClass c);
VarClass var_class_from_name(const std::string& s);

struct SparseTerm {
  std::uint32_t index;
  FieldElement coeff;
  bool operator==(const SparseTerm& o) const {
    return index == o.index && coeff == o.coeff;
  }
};

/// Sorted by index, nonzero coefficients only.
using SparseVec = std::vector<SparseTerm>;

struct ConstraintRow {
  SparseVec a, b, c;
};

struct WeakSite {
  std::string site_id;
  std::vector<std::uint32_t> rows;
};

struct Witness {
  std::vector<FieldElement> values;
};

struct ResidualVector {
  std::vector<FieldElement> residuals;
  bool all_zero() const {
    for (const auto& r : residuals)
      if (!r.is_zero()) return false;
    return true;
  }
};

/// Rank-1 constraint system plus the source-site mapping the mutation surface
/// needs. Immutable after construction.
class R1csInstance {
 public:
  R1csInstance(const FieldModulus* modulus, std::uint32_t num_vars,
               std::vector<ConstraintRow> rows, std::vector<VarClass> var_classes,
               std::vector<WeakSite> weak_sites);

  const FieldModulus* modulus() const { return modulus_; }
  std::uint32_t num_constraints() const { return std::uint32_t(rows_.size()); }
  std::uint32_t num_vars() const { return num_vars_; }
  const std::vector<ConstraintRow>& rows() const { return rows_; }
  const ConstraintRow& row(std::uint32_t i) const;
  const std::vector<VarClass>& var_classes() const { return var_classes_; }
  const std::vector<WeakSite>& weak_sites() const { return weak_sites_; }

  bool row_is_weak(std::uint32_t i) const { return row_site_[i] >= 0; }
  /// Index into weak_sites(), or -1.
  int row_site(std::uint32_t i) const { return row_site_[i]; }
  /// Variable a weak row defines, with its C-side coefficient. Only valid for
  /// weak rows that actually define one (site_var >= 0).
  int site_var(std::uint32_t row) const { return site_var_[row]; }

  /// Membership in the K partition: One, PublicInput and PublicOutput wires.
  bool in_k(std::uint32_t var) const;
  /// Membership in W: PrivateInput and Intermediate wires.
  bool in_w(std::uint32_t var) const { return !in_k(var); }

  std::vector<std::uint32_t> public_output_indices() const;
  std::vector<std::uint32_t> input_indices() const;  // public + private, ascending

  /// Replaces each selected row's relation by `site_var = constant`; everything
  /// else is shared with the original. Selected rows must be weak rows with a
  /// resolvable site variable.
  R1csInstance edited(const std::vector<std::uint32_t>& rows,
                      const std::vector<FieldElement>& constants) const;

 private:
  void index_sites();

  const FieldModulus* modulus_;
  std::uint32_t num_vars_;
  std::vector<ConstraintRow> rows_;
  std::vector<VarClass> var_classes_;
  std::vector<WeakSite> weak_sites_;
  std::vector<int> row_site_;
  std::vector<int> site_var_;
};

/// Trace partition of a witness: x = public inputs, z = private inputs and
/// intermediates, y = public outputs, each in ascending wire order.
struct ExecutionTrace {
  std::vector<FieldElement> x, z, y;
};

ExecutionTrace trace_from_witness(const R1csInstance& inst, const Witness& w);
Witness witness_from_trace(const R1csInstance& inst, const ExecutionTrace& t);

FieldElement sparse_inner(const SparseVec& v, const Witness& w, const FieldModulus* q);

ResidualVector eval_residuals(const R1csInstance& inst, const Witness& w);

/// True iff the trace satisfies inst and its public output differs from
/// original_y coordinatewise.
bool check_tcct(const R1csInstance& inst, const ExecutionTrace& trace,
                const std::vector<FieldElement>& original_y);

/// Sparse recheck: applies additive deltas on intermediate (delta_z) and
/// public-output (delta_y) wires to a base witness that satisfies inst, and
/// re-evaluates only rows whose support intersects the touched wires.
/// True iff all touched rows stay satisfied and delta_y is nonempty/nonzero.
bool differential_check(const R1csInstance& inst, const Witness& base,
                        const std::map<std::uint32_t, FieldElement>& delta_z,
                        const std::map<std::uint32_t, FieldElement>& delta_y);

std::vector<FieldElement> outputs_of(const R1csInstance& inst, const Witness& w);

struct ForwardResult {
  enum class Status { kOk, kViolated, kUnderdetermined };
  Status status = Status::kUnderdetermined;
  Witness witness;
  std::uint32_t offending_row = 0;
};

/// Executes the witness generator implied by the weak rows: inputs seed the
/// assignment, each weak row defines its site variable, non-weak rows act as
/// checks. Multi-pass until fixpoint.
ForwardResult run_forward(const R1csInstance& inst,
                          const std::map<std::uint32_t, FieldElement>& inputs);

// --- file formats ---

R1csInstance parse_circuit_json(const std::string& text);
std::string serialize_circuit_json(const R1csInstance& inst);

/// circom `.r1cs` container (magic "r1cs", version 1, typed sections).
/// Weak sites are not representable there; attach them from a sidecar with
/// apply_sites_json.
R1csInstance parse_r1cs_binary(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> write_r1cs_binary(const R1csInstance& inst);

/// Sidecar `{"weak_sites": [{"site_id": ..., "rows": [...]}]}`.
R1csInstance apply_sites_json(const R1csInstance& inst, const std::string& sites_json);

Witness parse_witness_json(const std::string& text, const FieldModulus* q);
std::string serialize_witness_json(const Witness& w);

}  // namespace zkcraft
