#include "zkcraft/extract.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

namespace zkcraft {

namespace {

void require_accepted(const VerifyOutcome& outcome, const char* what) {
  if (!outcome.accepted) {
    throw Error(Errc::kRejectedProof,
                std::string(what) + " requires an accepted proof (got " +
                    reject_reason_name(outcome.reason) + ")");
  }
}

}  // namespace

RecoveredEdit extract_selection(const ViolationProof& proof, const R1csInstance& inst,
                                const NodePlan& plan, const BlockVandermonde& block,
                                const VerifyOutcome& outcome) {
  require_accepted(outcome, "extract_selection");

  auto parts = reconstruct_parts(proof);
  if (!parts) {
    throw Error(Errc::kProofMalformed, "committed object not reconstructible");
  }
  auto basis = proof_basis(proof, inst, plan);
  auto coords =
      recover_selection_coords(parts->first, parts->second, basis.first, basis.second);
  if (!coords) {
    throw Error(Errc::kNonBooleanDelta,
                "selection coordinates not recoverable from openings");
  }

  // Reassemble rho from the recovered coordinates and invert the affine map
  // (offset t is zero in this deployment).
  std::vector<FieldElement> dc;
  dc.reserve(2 * proof.k);
  for (const auto& d : coords->delta_coords) dc.push_back(d);
  for (const auto& c : coords->c_coords) dc.push_back(c);
  std::vector<FieldElement> rho = mat_vec(block.m, dc);
  std::vector<FieldElement> recovered = mat_vec(block.inverse, rho);

  RecoveredEdit edit;
  edit.delta.reserve(proof.k);
  edit.c.reserve(proof.k);
  for (std::uint32_t i = 0; i < proof.k; ++i) {
    const FieldElement& dv = recovered[i];
    if (dv.is_zero()) {
      edit.delta.push_back(0);
    } else if (dv.is_one()) {
      edit.delta.push_back(1);
    } else {
      throw Error(Errc::kNonBooleanDelta,
                  "recovered selection entry is not a bit: " + dv.to_decimal());
    }
  }
  for (std::uint32_t i = 0; i < proof.k; ++i) {
    edit.c.push_back(recovered[proof.k + i]);
  }
  return edit;
}

std::optional<Witness> interpolate_witness(const ViolationProof& proof,
                                           const R1csInstance& inst,
                                           const VerifyOutcome& outcome) {
  require_accepted(outcome, "interpolate_witness");
  if (!proof.has_flag(ProofFlag::kWitness)) return std::nullopt;
  if (proof.witness_evals.size() > inst.num_vars()) {
    throw Error(Errc::kDegreeOverflow,
                "witness polynomial degree >= n (attachment longer than witness)");
  }
  if (proof.witness_evals.size() != inst.num_vars()) {
    throw Error(Errc::kProofMalformed, "witness attachment shorter than witness");
  }
  Witness w;
  w.values = proof.witness_evals;  // evaluation basis on {0..n-1}: a read-out
  return w;
}

ReconstructionResult reconstruct_witness(
    const R1csInstance& inst, const std::vector<std::uint32_t>& pool_rows,
    const RecoveredEdit& edit, const std::map<std::uint32_t, FieldElement>& pinned) {
  if (edit.delta.size() != pool_rows.size() || edit.c.size() != pool_rows.size()) {
    throw Error(Errc::kShapeMismatch, "edit shape");
  }
  const FieldModulus* q = inst.modulus();
  std::vector<std::uint32_t> rows;
  std::vector<FieldElement> consts;
  for (std::size_t i = 0; i < edit.delta.size(); ++i) {
    if (edit.delta[i]) {
      rows.push_back(pool_rows[i]);
      consts.push_back(edit.c[i]);
    }
  }
  R1csInstance edited = inst.edited(rows, consts);

  std::vector<FieldElement> vals(inst.num_vars(), FieldElement::zero(q));
  std::vector<bool> known(inst.num_vars(), false);
  vals[0] = FieldElement::one(q);
  known[0] = true;
  for (const auto& [idx, v] : pinned) {
    if (idx >= inst.num_vars()) throw Error(Errc::kIndexOutOfRange, "pinned index");
    vals[idx] = v;
    known[idx] = true;
  }

  // Phase 1: forward substitution in topological row order.
  auto all_known_except = [&](const SparseVec& v, int skip) {
    for (const auto& t : v) {
      if (int(t.index) != skip && !known[t.index]) return false;
    }
    return true;
  };
  auto inner = [&](const SparseVec& v, int skip, const FieldElement** coeff) {
    FieldElement acc = FieldElement::zero(q);
    for (const auto& t : v) {
      if (int(t.index) == skip) {
        if (coeff) *coeff = &t.coeff;
        continue;
      }
      acc += t.coeff * vals[t.index];
    }
    return acc;
  };
  bool progress = true;
  std::vector<bool> used(edited.num_constraints(), false);
  while (progress) {
    progress = false;
    for (std::uint32_t r = 0; r < edited.num_constraints(); ++r) {
      if (used[r]) continue;
      int sv = edited.row_is_weak(r) ? edited.site_var(r) : -1;
      if (sv < 0 || known[sv]) continue;
      const ConstraintRow& row = edited.rows()[r];
      if (!all_known_except(row.a, -1) || !all_known_except(row.b, -1) ||
          !all_known_except(row.c, sv)) {
        continue;
      }
      const FieldElement* coeff = nullptr;
      FieldElement rest = inner(row.c, sv, &coeff);
      if (coeff == nullptr || coeff->is_zero()) continue;
      FieldElement ab = inner(row.a, -1, nullptr) * inner(row.b, -1, nullptr);
      vals[sv] = (ab - rest) * coeff->inv();
      known[sv] = true;
      used[r] = true;
      progress = true;
    }
  }

  // Phase 2: rows still open and affine in the unknowns become a linear
  // system; genuinely quadratic leftovers are skipped (the extractor's solve
  // is linear by contract).
  std::vector<std::uint32_t> unknown_idx;
  for (std::uint32_t i = 0; i < inst.num_vars(); ++i) {
    if (!known[i]) unknown_idx.push_back(i);
  }
  ReconstructionResult out;
  if (!unknown_idx.empty()) {
    std::map<std::uint32_t, std::size_t> col_of;
    for (std::size_t c = 0; c < unknown_idx.size(); ++c) col_of[unknown_idx[c]] = c;
    Matrix m;
    std::vector<FieldElement> rhs;
    for (std::uint32_t r = 0; r < edited.num_constraints(); ++r) {
      const ConstraintRow& row = edited.rows()[r];
      bool a_known = all_known_except(row.a, -1);
      bool b_known = all_known_except(row.b, -1);
      if (!a_known && !b_known) continue;  // quadratic in unknowns
      // (known)*(affine) - affine = 0 is linear in the unknowns.
      std::vector<FieldElement> coeffs(unknown_idx.size(), FieldElement::zero(q));
      FieldElement constant = FieldElement::zero(q);
      auto add_affine = [&](const SparseVec& v, const FieldElement& scale, int sign) {
        for (const auto& t : v) {
          FieldElement term = t.coeff * scale;
          if (sign < 0) term = -term;
          if (known[t.index]) {
            constant += term * vals[t.index];
          } else {
            coeffs[col_of[t.index]] += term;
          }
        }
      };
      if (a_known && b_known) {
        FieldElement ab = inner(row.a, -1, nullptr) * inner(row.b, -1, nullptr);
        constant += ab;
        add_affine(row.c, FieldElement::one(q), -1);
      } else if (a_known) {
        FieldElement av = inner(row.a, -1, nullptr);
        add_affine(row.b, av, +1);
        add_affine(row.c, FieldElement::one(q), -1);
      } else {
        FieldElement bv = inner(row.b, -1, nullptr);
        add_affine(row.a, bv, +1);
        add_affine(row.c, FieldElement::one(q), -1);
      }
      bool any = false;
      for (const auto& co : coeffs) any = any || !co.is_zero();
      if (!any) continue;
      m.push_back(std::move(coeffs));
      rhs.push_back(-constant);
    }
    if (!m.empty()) {
      LinearSolveResult sol = solve_linear(m, rhs);
      if (sol.kind == LinearSolveResult::Kind::kInconsistent) {
        throw Error(Errc::kNoSolution, "edited system has no solution");
      }
      for (std::size_t c = 0; c < unknown_idx.size(); ++c) {
        vals[unknown_idx[c]] = sol.solution[c];
        known[unknown_idx[c]] = true;
      }
      if (sol.kind == LinearSolveResult::Kind::kUnderdetermined) {
        out.underdetermined = true;
        for (std::size_t fc : sol.free_columns) {
          out.free_vars.push_back(unknown_idx[fc]);
        }
      }
    } else {
      // Nothing constrains the leftovers: canonical zero assignment.
      out.underdetermined = true;
      out.free_vars = unknown_idx;
      for (std::uint32_t i : unknown_idx) known[i] = true;
    }
  }

  out.witness.values = std::move(vals);
  ResidualVector res = eval_residuals(edited, out.witness);
  if (!res.all_zero()) {
    throw Error(Errc::kNoSolution,
                "reconstructed witness does not satisfy the edited system");
  }
  return out;
}

Counterexample assemble_counterexample(const R1csInstance& inst,
                                       const std::vector<std::uint32_t>& pool_rows,
                                       const RecoveredEdit& edit, const Witness& w_prime,
                                       const std::vector<FieldElement>& y_orig,
                                       std::string mutated_source) {
  Counterexample cex;
  cex.edit = edit;
  cex.w_prime = w_prime;
  cex.trace = trace_from_witness(inst, w_prime);
  cex.y_orig = y_orig;
  cex.mutated_source = std::move(mutated_source);

  std::vector<std::uint32_t> rows;
  std::vector<FieldElement> consts;
  for (std::size_t i = 0; i < edit.delta.size(); ++i) {
    if (edit.delta[i]) {
      rows.push_back(pool_rows[i]);
      consts.push_back(edit.c[i]);
    }
  }
  R1csInstance edited = inst.edited(rows, consts);
  if (!check_tcct(edited, cex.trace, y_orig)) {
    throw Error(Errc::kInvariantError,
                "assembled counterexample fails the edited-system acceptance check");
  }
  return cex;
}

std::string counterexample_to_json(const Counterexample& cex) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json delta = nlohmann::ordered_json::array();
  for (std::uint8_t d : cex.edit.delta) delta.push_back(int(d));
  j["delta"] = std::move(delta);
  auto elems = [](const std::vector<FieldElement>& es) {
    nlohmann::ordered_json a = nlohmann::ordered_json::array();
    for (const auto& e : es) a.push_back(e.to_decimal());
    return a;
  };
  j["c"] = elems(cex.edit.c);
  j["x_prime"] = elems(cex.trace.x);
  j["z_prime"] = elems(cex.trace.z);
  j["y_prime"] = elems(cex.trace.y);
  j["y_orig"] = elems(cex.y_orig);
  j["mutated_source"] = cex.mutated_source;
  j["replayed"] = cex.replayed;
  j["witness_source"] = cex.edit.source == WitnessSource::kInterpolatedWitness
                            ? "interpolated_witness"
                            : "linear_reconstruction";
  j["underdetermined"] = cex.underdetermined;
  return j.dump(2) + "\n";
}

}  // namespace zkcraft
