#include "zkcraft/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include <json.hpp>

namespace zkcraft {

namespace {

std::uint64_t next_pow2(std::uint64_t v) {
  std::uint64_t p = 1;
  while (p < v) p <<= 1;
  return p;
}

}  // namespace

std::vector<BackendProfile> default_backend_profiles() {
  return {
      {"basefold_profile", std::uint64_t(1) << 18, std::uint64_t(1) << 22, 10,
       "single-commitment opening, <= 218 B in the reference stack; merkle_eval_v1 "
       "openings grow with log2(domain)"},
      {"hyperplonk_plus_profile", std::uint64_t(1) << 20, std::uint64_t(1) << 24, 16,
       "constant 96 B in the reference stack; not reproduced by merkle_eval_v1"},
  };
}

const char* fallback_reason_name(FallbackReason r) {
  switch (r) {
    case FallbackReason::kNone: return "none";
    case FallbackReason::kDegExceeded: return "deg_exceeded";
    case FallbackReason::kDomainExceeded: return "domain_exceeded";
    case FallbackReason::kCryptoUnavailable: return "crypto_unavailable";
  }
  return "?";
}

BackendDecision select_backend(std::uint64_t d, std::uint64_t domain,
                               const std::vector<BackendProfile>& profiles) {
  BackendDecision out;
  for (const auto& p : profiles) {
    if (d <= p.d_max && domain <= p.domain_max) {
      out.zk_native = true;
      out.profile = p;
      out.reason = FallbackReason::kNone;
      return out;
    }
  }
  // Report which limit fired first against the widest profile.
  const BackendProfile& widest = profiles.empty() ? out.profile : profiles.back();
  out.zk_native = false;
  out.profile = widest;
  out.reason = (profiles.empty() || d > widest.d_max) ? FallbackReason::kDegExceeded
                                                      : FallbackReason::kDomainExceeded;
  return out;
}

SearchBudget SearchBudget::compute(std::uint32_t k, std::uint32_t t_max) {
  SearchBudget b;
  b.k = k;
  b.t_max = t_max;
  std::uint64_t total = 0;
  for (std::uint32_t t = 1; t <= t_max && t <= k; ++t) {
    // C(k, t) incrementally; desk-scale k keeps this within u64.
    std::uint64_t c = 1;
    for (std::uint32_t i = 0; i < t; ++i) c = c * (k - i) / (i + 1);
    total += c;
  }
  b.max_calls = total;
  return b;
}

std::string manifest_to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["schema_version"] = m.schema_version;
  j["backend_id"] = m.backend_id;
  j["decision"]["phi_degree"] = m.phi_degree;
  j["decision"]["domain_size"] = m.domain_size;
  j["fallback_reason"] = fallback_reason_name(m.fallback_reason);
  j["node_plan"]["alpha"] = m.alpha;
  j["node_plan"]["beta"] = m.beta;
  j["node_plan"]["d_row"] = m.d_row;
  j["node_plan"]["d_sel"] = m.d_sel;
  j["node_plan"]["t_offset"] = m.t_offset;
  j["k_partition"] = m.k_partition;
  j["slicer"]["score_convention"] = m.score_convention;
  j["slicer"]["lambda"] = m.lambda;
  j["slicer"]["mu"] = m.mu;
  j["slicer"]["pool_size"] = m.pool_size;
  j["slicer"]["pool_rows"] = m.pool_rows;
  j["t_max"] = m.t_max;
  j["oracle"]["kind"] = m.oracle_kind;
  j["oracle"]["target"] = m.oracle_target;
  j["oracle"]["seed"] = m.oracle_seed;
  nlohmann::ordered_json tlog = nlohmann::ordered_json::array();
  for (const auto& entry : m.template_log) {
    nlohmann::ordered_json e;
    e["site_id"] = entry.site_id;
    e["provenance"] =
        entry.batch.provenance == Provenance::kBuiltin ? "builtin" : "external";
    if (!entry.batch.tool_id.empty()) e["tool_id"] = entry.batch.tool_id;
    e["candidates"] = entry.batch.candidates;
    nlohmann::ordered_json fps = nlohmann::ordered_json::array();
    for (std::uint64_t fp : entry.batch.fingerprints) {
      char buf[19];
      std::snprintf(buf, sizeof(buf), "0x%016llx", (unsigned long long)fp);
      fps.push_back(buf);
    }
    e["fingerprints"] = std::move(fps);
    e["rejected"] = entry.batch.rejected;
    e["external_failed"] = entry.batch.external_failed;
    tlog.push_back(std::move(e));
  }
  j["oracle"]["template_log"] = std::move(tlog);
  j["iop"]["ell"] = m.ell;
  j["iop"]["security_bits"] = m.security_bits;
  j["iop"]["knowledge_error_linear"] = m.knowledge_error_linear;
  j["iop"]["knowledge_error_exponential"] = m.knowledge_error_exponential;
  j["iop"]["scheme_id"] = m.scheme_id;
  j["seed"] = m.seed;
  j["workers"] = m.workers;
  j["counters"]["subset_evaluations"] = m.subset_evaluations;
  j["counters"]["max_calls"] = m.max_calls;
  j["counters"]["candidates_tried"] = m.candidates_tried;
  j["found"] = m.found;
  j["budget_exhausted"] = m.budget_exhausted;
  j["artifacts"]["proof_file"] = m.proof_file;
  j["artifacts"]["counterexample_file"] = m.counterexample_file;
  j["artifacts"]["mutated_file"] = m.mutated_file;
  j["artifacts"]["timings_file"] = m.timings_file;
  j["greedy_cover"]["attempted"] = m.greedy_cover_attempted;
  j["greedy_cover"]["size"] = m.greedy_cover_size;
  j["greedy_cover"]["bound"] = m.greedy_cover_bound;
  if (m.epsilon) j["epsilon"] = *m.epsilon;
  return j.dump(2) + "\n";
}

void write_manifest(const RunManifest& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::kIoError, "cannot write manifest: " + path);
  out << manifest_to_json(m);
}

namespace {

struct EligibleSite {
  std::size_t pool_pos;       // position within pool.rows
  std::uint32_t row;          // constraint row index
  std::string site_id;
  std::vector<FieldElement> constants;  // validated template constants
};

std::map<std::uint32_t, FieldElement> input_map_of(const R1csInstance& inst,
                                                   const Witness& w) {
  std::map<std::uint32_t, FieldElement> m;
  for (std::uint32_t i : inst.input_indices()) m.emplace(i, w.values[i]);
  return m;
}

/// Deterministic candidate input assignments: either the whole input space
/// (lexicographic) when small enough, or the original assignment, its
/// single-coordinate neighbors, and seeded biased draws.
std::vector<std::map<std::uint32_t, FieldElement>> build_input_list(
    const R1csInstance& inst, const Witness& original, const DriverConfig& cfg) {
  const FieldModulus* q = inst.modulus();
  std::vector<std::uint32_t> idx = inst.input_indices();
  std::vector<std::map<std::uint32_t, FieldElement>> out;

  bool exhaustive = false;
  if (q->fits_u64() && !idx.empty()) {
    long double space = 1;
    for (std::size_t i = 0; i < idx.size() && space <= cfg.exhaustive_cap; ++i) {
      space *= (long double)q->as_u64();
    }
    exhaustive = space <= cfg.exhaustive_cap;
  }
  if (idx.empty()) {
    out.push_back({});
    return out;
  }
  if (exhaustive) {
    std::vector<std::uint64_t> odo(idx.size(), 0);
    while (true) {
      std::map<std::uint32_t, FieldElement> m;
      for (std::size_t i = 0; i < idx.size(); ++i) {
        m.emplace(idx[i], FieldElement::from_u64(odo[i], q));
      }
      out.push_back(std::move(m));
      std::size_t p = idx.size();
      while (p > 0) {
        --p;
        if (++odo[p] < q->as_u64()) break;
        odo[p] = 0;
        if (p == 0) return out;
      }
      if (p == 0 && odo[0] == 0) return out;
    }
  }

  std::set<std::vector<std::string>> seen;
  auto push = [&](std::map<std::uint32_t, FieldElement> m) {
    std::vector<std::string> key;
    for (const auto& [i, v] : m) key.push_back(v.to_decimal());
    if (seen.insert(key).second) out.push_back(std::move(m));
  };

  push(input_map_of(inst, original));
  FieldElement one = FieldElement::one(q);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    for (int dir : {+1, -1}) {
      std::map<std::uint32_t, FieldElement> m = input_map_of(inst, original);
      auto it = m.find(idx[i]);
      it->second = dir > 0 ? it->second + one : it->second - one;
      push(std::move(m));
    }
  }
  std::uint64_t counter = 0;
  while (out.size() < cfg.sample_cap) {
    std::map<std::uint32_t, FieldElement> m;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      m.emplace(idx[i],
                sample_biased({}, cfg.seed ^ 0x9e3779b97f4a7c15ull,
                              counter * idx.size() + i, q));
    }
    ++counter;
    push(std::move(m));
    if (counter > std::uint64_t(cfg.sample_cap) * 4) break;
  }
  return out;
}

/// Forward pass with soft checks: weak rows define, nothing aborts. Returns
/// the residual of `target_row` when its operands are resolvable.
std::optional<FieldElement> forward_residual(const R1csInstance& inst,
                                             const std::map<std::uint32_t, FieldElement>& inputs,
                                             std::uint32_t target_row) {
  const FieldModulus* q = inst.modulus();
  std::vector<FieldElement> vals(inst.num_vars(), FieldElement::zero(q));
  std::vector<bool> known(inst.num_vars(), false);
  vals[0] = FieldElement::one(q);
  known[0] = true;
  for (const auto& [i, v] : inputs) {
    vals[i] = v;
    known[i] = true;
  }
  auto resolved = [&](const SparseVec& v, int skip) {
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
  while (progress) {
    progress = false;
    for (std::uint32_t r = 0; r < inst.num_constraints(); ++r) {
      int sv = inst.row_is_weak(r) ? inst.site_var(r) : -1;
      if (sv < 0 || known[sv]) continue;
      const ConstraintRow& row = inst.rows()[r];
      if (!resolved(row.a, -1) || !resolved(row.b, -1) || !resolved(row.c, sv)) continue;
      const FieldElement* coeff = nullptr;
      FieldElement rest = inner(row.c, sv, &coeff);
      if (coeff == nullptr || coeff->is_zero()) continue;
      FieldElement ab = inner(row.a, -1, nullptr) * inner(row.b, -1, nullptr);
      vals[sv] = (ab - rest) * coeff->inv();
      known[sv] = true;
      progress = true;
    }
  }
  const ConstraintRow& row = inst.rows()[target_row];
  if (!resolved(row.a, -1) || !resolved(row.b, -1) || !resolved(row.c, -1)) {
    return std::nullopt;
  }
  return inner(row.a, -1, nullptr) * inner(row.b, -1, nullptr) -
         inner(row.c, -1, nullptr);
}

struct SubsetOutcome {
  bool found = false;
  CandidateTriple triple;
  std::uint64_t tried = 0;  // candidates evaluated up to (and incl.) success
};

/// Full evaluation of one subset: template-constant odometer x input list,
/// with optional per-site algebraic refinement on the first violated row.
SubsetOutcome evaluate_subset(const R1csInstance& inst,
                              const std::vector<EligibleSite>& sites,
                              const std::vector<std::size_t>& subset,
                              const std::vector<std::map<std::uint32_t, FieldElement>>& input_list,
                              const std::vector<FieldElement>& y_orig,
                              const Witness& original, const DriverConfig& cfg) {
  SubsetOutcome out;
  const FieldModulus* q = inst.modulus();
  std::vector<std::uint32_t> rows;
  for (std::size_t s : subset) rows.push_back(sites[s].row);

  std::function<bool(const std::vector<FieldElement>&,
                     const std::map<std::uint32_t, FieldElement>&, bool)>
      try_candidate = [&](const std::vector<FieldElement>& consts,
                          const std::map<std::uint32_t, FieldElement>& inputs,
                          bool allow_refine) -> bool {
    ++out.tried;
    R1csInstance edited = inst.edited(rows, consts);
    ForwardResult fwd = run_forward(edited, inputs);
    if (fwd.status == ForwardResult::Status::kViolated) {
      if (allow_refine && cfg.enable_site_solve) {
        // Probe the violated residual as a polynomial in each selected
        // constant; roots become refined candidates.
        for (std::size_t pi = 0; pi < subset.size(); ++pi) {
          std::vector<std::pair<FieldElement, FieldElement>> pts;
          bool ok = true;
          for (std::uint64_t v = 0; v <= 4; ++v) {
            std::vector<FieldElement> probe = consts;
            probe[pi] = FieldElement::from_u64(v, q);
            auto res = forward_residual(inst.edited(rows, probe), inputs,
                                        fwd.offending_row);
            if (!res) {
              ok = false;
              break;
            }
            pts.emplace_back(FieldElement::from_u64(v, q), *res);
          }
          if (!ok) continue;
          DensePoly rp = lagrange_interpolate(pts);
          if (rp.is_zero() || rp.degree() == 0) continue;
          SiteEquation eq;
          eq.site_id = sites[subset[pi]].site_id;
          if (rp.degree() == 1) {
            eq.degree = 1;
            eq.alpha = rp.coeff(1);
            eq.beta = rp.coeff(0);
          } else {
            eq.degree = std::uint32_t(rp.degree());
            for (int i = 0; i <= rp.degree(); ++i) eq.poly_coeffs.push_back(rp.coeff(i));
            eq.alpha = FieldElement::zero(q);
            eq.beta = FieldElement::zero(q);
          }
          SiteRoots roots;
          try {
            roots = solve_site_constant(eq);
          } catch (const Error& e) {
            if (e.code() == Errc::kDegreeTooHigh) continue;
            throw;
          }
          for (const FieldElement& root : roots.roots) {
            std::vector<FieldElement> refined = consts;
            refined[pi] = root;
            if (try_candidate(refined, inputs, /*allow_refine=*/false)) return true;
          }
        }
      }
      return false;
    }
    if (fwd.status != ForwardResult::Status::kOk) return false;
    std::vector<FieldElement> y = outputs_of(edited, fwd.witness);
    if (y == y_orig) return false;

    // Differential pre-filter when the inputs coincide with the original run,
    // then the full residual check.
    std::map<std::uint32_t, FieldElement> x_orig = input_map_of(inst, original);
    if (inputs == x_orig) {
      std::map<std::uint32_t, FieldElement> dz, dy;
      for (std::uint32_t i = 0; i < inst.num_vars(); ++i) {
        FieldElement d = fwd.witness.values[i] - original.values[i];
        if (d.is_zero()) continue;
        if (inst.var_classes()[i] == VarClass::kIntermediate) {
          dz.emplace(i, d);
        } else if (inst.var_classes()[i] == VarClass::kPublicOutput) {
          dy.emplace(i, d);
        }
      }
      if (!differential_check(edited, original, dz, dy)) return false;
    }
    if (!eval_residuals(edited, fwd.witness).all_zero()) return false;

    out.found = true;
    out.triple.rows = rows;
    out.triple.constants = consts;
    out.triple.inputs = inputs;
    out.triple.w_prime = fwd.witness;
    out.triple.y_prime = std::move(y);
    return true;
  };

  // Odometer over per-site template constants, inputs innermost.
  std::vector<std::size_t> odo(subset.size(), 0);
  while (true) {
    std::vector<FieldElement> consts;
    consts.reserve(subset.size());
    for (std::size_t i = 0; i < subset.size(); ++i) {
      consts.push_back(sites[subset[i]].constants[odo[i]]);
    }
    for (const auto& inputs : input_list) {
      if (try_candidate(consts, inputs, /*allow_refine=*/true)) return out;
    }
    std::size_t p = subset.size();
    bool done = true;
    while (p > 0) {
      --p;
      if (++odo[p] < sites[subset[p]].constants.size()) {
        done = false;
        break;
      }
      odo[p] = 0;
    }
    if (done) break;
  }
  return out;
}

/// Lexicographic size-t subsets of {0..n-1}.
bool next_subset(std::vector<std::size_t>& s, std::size_t n) {
  std::size_t t = s.size();
  std::size_t i = t;
  while (i > 0) {
    --i;
    if (s[i] < n - (t - i)) {
      ++s[i];
      for (std::size_t j = i + 1; j < t; ++j) s[j] = s[j - 1] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

SearchStats fallback_search(const R1csInstance& inst, const CandidatePool& pool,
                            const SearchBudget& budget,
                            const std::vector<TemplateLogEntry>& oracle_batches,
                            const Witness& original, const DriverConfig& cfg,
                            const std::function<bool(const CandidateTriple&)>& sink) {
  SearchStats stats;
  const FieldModulus* q = inst.modulus();
  std::vector<FieldElement> y_orig = outputs_of(inst, original);

  // Eligible sites: weak pool rows with a resolvable site variable, with their
  // validated constants drawn from the oracle batches.
  std::vector<EligibleSite> sites;
  for (std::size_t p = 0; p < pool.rows.size(); ++p) {
    std::uint32_t row = pool.rows[p];
    if (!inst.row_is_weak(row) || inst.site_var(row) < 0) continue;
    EligibleSite s;
    s.pool_pos = p;
    s.row = row;
    s.site_id = inst.weak_sites()[inst.row_site(row)].site_id;
    for (const auto& entry : oracle_batches) {
      if (entry.site_id != s.site_id) continue;
      for (const auto& cand : entry.batch.candidates) {
        try {
          ExprPtr e = parse_expression(cand);
          s.constants.push_back(eval_expression(*e, q, {}));
        } catch (const Error&) {
          // non-constant template (named subexpression): unusable here
        }
      }
    }
    if (s.constants.empty()) {
      s.constants.push_back(seeded_fallback_constant(cfg.oracle.seed, s.site_id, q));
    }
    sites.push_back(std::move(s));
  }
  if (sites.empty()) return stats;

  std::vector<std::map<std::uint32_t, FieldElement>> input_list =
      build_input_list(inst, original, cfg);

  std::uint32_t t_cap = std::min<std::uint32_t>(cfg.t_max, std::uint32_t(sites.size()));
  std::uint32_t workers = std::max<std::uint32_t>(1, cfg.workers);

  for (std::uint32_t t = 1; t <= t_cap; ++t) {
    std::vector<std::size_t> subset(t);
    for (std::uint32_t i = 0; i < t; ++i) subset[i] = i;
    bool more = true;
    while (more) {
      // Collect the next window of subsets under the call cap.
      std::vector<std::vector<std::size_t>> window;
      while (window.size() < workers && more) {
        if (stats.subset_evaluations + window.size() >= budget.max_calls) {
          stats.budget_exhausted = true;
          break;
        }
        window.push_back(subset);
        more = next_subset(subset, sites.size());
      }
      if (window.empty()) return stats;

      std::vector<SubsetOutcome> results(window.size());
      if (window.size() == 1) {
        results[0] = evaluate_subset(inst, sites, window[0], input_list, y_orig,
                                     original, cfg);
      } else {
        std::vector<std::thread> threads;
        for (std::size_t wi = 0; wi < window.size(); ++wi) {
          threads.emplace_back([&, wi]() {
            results[wi] = evaluate_subset(inst, sites, window[wi], input_list, y_orig,
                                          original, cfg);
          });
        }
        for (auto& th : threads) th.join();
      }
      // Merge in deterministic subset order: counters follow the sequential
      // semantics so the manifest is independent of the worker count.
      for (std::size_t wi = 0; wi < window.size(); ++wi) {
        ++stats.subset_evaluations;
        stats.candidates_tried += results[wi].tried;
        if (results[wi].found) {
          if (!sink(results[wi].triple)) return stats;
        }
      }
      if (stats.budget_exhausted) return stats;
    }
  }
  if (stats.subset_evaluations >= budget.max_calls) stats.budget_exhausted = true;
  return stats;
}

namespace {

struct GreedyResult {
  bool attempted = false;
  bool success = false;
  std::uint32_t cover_size = 0;
  CandidateTriple triple;
};

/// Greedy cover over per-row fixes, used when the edit budget is below the
/// cardinality the instance seems to need. The cover size approximates the
/// optimum within a factor of two.
GreedyResult greedy_cover(const R1csInstance& inst, const std::vector<EligibleSite>& sites,
                          const std::vector<std::map<std::uint32_t, FieldElement>>& probes,
                          const std::vector<FieldElement>& y_orig) {
  GreedyResult out;
  out.attempted = true;

  std::map<std::size_t, FieldElement> chosen;  // site index -> constant
  auto metric = [&](const std::map<std::size_t, FieldElement>& edits,
                    CandidateTriple* hit) -> std::uint64_t {
    std::vector<std::uint32_t> rows;
    std::vector<FieldElement> consts;
    for (const auto& [si, c] : edits) {
      rows.push_back(sites[si].row);
      consts.push_back(c);
    }
    R1csInstance edited = inst.edited(rows, consts);
    std::uint64_t bad = 0;
    for (const auto& inputs : probes) {
      ForwardResult fwd = run_forward(edited, inputs);
      if (fwd.status != ForwardResult::Status::kOk) {
        bad += 2;
        continue;
      }
      std::vector<FieldElement> y = outputs_of(edited, fwd.witness);
      if (y == y_orig) {
        bad += 1;
        continue;
      }
      if (hit) {
        hit->rows = rows;
        hit->constants = consts;
        hit->inputs = inputs;
        hit->w_prime = fwd.witness;
        hit->y_prime = y;
      }
    }
    return bad;
  };

  std::uint64_t best = metric(chosen, nullptr);
  for (std::size_t round = 0; round < sites.size(); ++round) {
    bool improved = false;
    std::size_t best_site = 0;
    FieldElement best_const;
    for (std::size_t si = 0; si < sites.size(); ++si) {
      if (chosen.count(si)) continue;
      for (const FieldElement& c : sites[si].constants) {
        std::map<std::size_t, FieldElement> trial = chosen;
        trial.emplace(si, c);
        std::uint64_t m = metric(trial, nullptr);
        if (m < best) {
          best = m;
          best_site = si;
          best_const = c;
          improved = true;
        }
      }
    }
    if (!improved) break;
    chosen.emplace(best_site, best_const);
    CandidateTriple hit;
    if (metric(chosen, &hit) < std::uint64_t(probes.size())) {
      // At least one probe fully satisfied with divergence.
      if (!hit.rows.empty()) {
        out.success = true;
        out.cover_size = std::uint32_t(chosen.size());
        out.triple = std::move(hit);
        return out;
      }
    }
  }
  out.cover_size = std::uint32_t(chosen.size());
  return out;
}

void emit_files(RunResult& result, const R1csInstance& inst, const CandidatePool& pool,
                const std::vector<FieldElement>& y_orig, const DriverConfig& cfg,
                const std::map<std::string, double>& timings) {
  if (cfg.out_dir.empty()) return;
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  const std::string base = cfg.out_dir + "/" + cfg.circuit_name;

  if (result.proof) {
    result.manifest.proof_file = base + ".proof.bin";
    std::ofstream pf(result.manifest.proof_file, std::ios::binary);
    std::vector<std::uint8_t> bytes = serialize_proof(*result.proof);
    pf.write(reinterpret_cast<const char*>(bytes.data()),
             std::streamsize(bytes.size()));
    std::ofstream pj(base + ".proof.json", std::ios::binary);
    pj << proof_to_json(*result.proof);
  }
  if (result.counterexample) {
    result.manifest.counterexample_file = base + ".counterexample.json";
    std::ofstream cf(result.manifest.counterexample_file, std::ios::binary);
    cf << counterexample_to_json(*result.counterexample);
    if (!result.counterexample->mutated_source.empty()) {
      result.manifest.mutated_file = base + ".mutated.circom";
      std::ofstream mf(result.manifest.mutated_file, std::ios::binary);
      mf << result.counterexample->mutated_source;
    }
  }
  if (cfg.emit_smt2) {
    for (std::uint32_t t = 1; t <= cfg.t_max && t <= pool.rows.size(); ++t) {
      std::ofstream sf(base + ".t" + std::to_string(t) + ".smt2", std::ios::binary);
      sf << smtlib_emit(inst, pool, t, y_orig);
    }
  }
  // Wall-clock data lives outside the manifest so identical runs stay
  // byte-identical.
  result.manifest.timings_file = base + ".timings.json";
  {
    nlohmann::ordered_json tj;
    for (const auto& [k, v] : timings) tj[k] = v;
    std::ofstream tf(result.manifest.timings_file, std::ios::binary);
    tf << tj.dump(2) << "\n";
  }
  write_manifest(result.manifest, base + ".manifest.json");
}

}  // namespace

RunResult run_pipeline(const R1csInstance& inst,
                       const std::optional<std::string>& program_text,
                       const Witness& original_witness, const DriverConfig& cfg) {
  auto t_start = std::chrono::steady_clock::now();
  RunResult result;
  RunManifest& man = result.manifest;
  const FieldModulus* q = inst.modulus();

  if (!eval_residuals(inst, original_witness).all_zero()) {
    throw Error(Errc::kInvariantError, "original witness violates the instance");
  }
  std::vector<FieldElement> y_orig = outputs_of(inst, original_witness);

  CandidatePool pool = select_pool(inst, cfg.slicer);
  std::uint32_t k = std::uint32_t(pool.rows.size());

  man.score_convention =
      cfg.slicer.convention == ScoreConvention::kMethodology ? "methodology" : "toy";
  man.lambda = cfg.slicer.score_lambda.get_str();
  man.mu = cfg.slicer.score_mu.get_str();
  man.pool_size = cfg.slicer.pool_size;
  man.pool_rows = pool.rows;
  man.t_max = cfg.t_max;
  man.seed = cfg.seed;
  man.workers = cfg.workers;
  man.ell = cfg.ell;
  man.security_bits = cfg.security_bits;
  man.oracle_kind = cfg.oracle.kind == OracleKind::kBuiltin      ? "builtin"
                    : cfg.oracle.kind == OracleKind::kSubprocess ? "subprocess"
                                                                 : "http";
  man.oracle_target = cfg.oracle.target;
  man.oracle_seed = cfg.oracle.seed;
  if (cfg.gamma && cfg.gamma_star) {
    double eps = std::exp(-2.0 * double(k) * (*cfg.gamma - *cfg.gamma_star) *
                          (*cfg.gamma - *cfg.gamma_star));
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", eps);
    man.epsilon = std::string(buf);
  }

  // Backend envelope: d = 2n + k - 1, |D| = next power of two above m.
  std::uint64_t d = 2 * std::uint64_t(inst.num_vars()) + k - 1;
  std::uint64_t domain = next_pow2(std::max<std::uint64_t>(inst.num_constraints(), 2));
  man.phi_degree = d;
  man.domain_size = domain;

  std::vector<BackendProfile> profiles = default_backend_profiles();
  if (cfg.backend == "basefold") {
    profiles = {profiles[0]};
  } else if (cfg.backend == "hyperplonk") {
    profiles = {profiles[1]};
  }
  BackendDecision decision = select_backend(d, domain, profiles);

  // Startup crypto self-test: commit/open/verify roundtrip on a 4-leaf tree.
  bool crypto_ok = !cfg.force_crypto_unavailable;
  if (crypto_ok) {
    std::vector<Digest> leaves;
    for (std::uint64_t i = 0; i < 4; ++i) {
      leaves.push_back(merkle_leaf_hash(i, FieldElement::from_u64(i + 7, q)));
    }
    MerkleTree tree(leaves);
    Commitment com{tree.root(), 4, 1, kSchemeMerkleEvalV1};
    OpeningProof op{2, FieldElement::from_u64(9, q), tree.path(2)};
    crypto_ok = verify_opening(com, op);
  }
  if (!crypto_ok) {
    decision.zk_native = false;
    decision.reason = FallbackReason::kCryptoUnavailable;
  }
  man.backend_id = decision.zk_native ? decision.profile.id : "fallback";
  man.fallback_reason = decision.reason;

  KnowledgeErrorBound bound = knowledge_error_bound(
      q, std::max<std::uint32_t>(1, std::uint32_t(y_orig.size())), d, cfg.ell);
  man.knowledge_error_linear = bound.linear.get_str();
  man.knowledge_error_exponential = bound.exponential.get_str();

  // Node plan (also recorded when the run falls back, for reproducibility).
  NodePlan plan = choose_nodes(q, k);
  for (const auto& a : plan.alpha) man.alpha.push_back(a.to_decimal());
  for (const auto& b : plan.beta) man.beta.push_back(b.to_decimal());
  man.d_row = plan.d_row;
  man.d_sel = plan.d_sel;

  // Oracle batches per eligible pool site.
  std::optional<Program> program;
  std::map<std::string, FieldElement> program_env;
  if (program_text) {
    program = parse_program(*program_text);
  }
  for (std::uint32_t row : pool.rows) {
    if (!inst.row_is_weak(row) || inst.site_var(row) < 0) continue;
    const std::string& site_id = inst.weak_sites()[inst.row_site(row)].site_id;
    std::string name = site_id;
    std::size_t dot = name.rfind('.');
    if (dot != std::string::npos) name = name.substr(dot + 1);
    std::string site_text = name + " <== 0;";
    if (program) {
      for (const auto& st : program->statements) {
        if (st.kind == Statement::Kind::kWeakAssign && st.lhs == name) {
          site_text = program->lines[st.line];
          break;
        }
      }
    }
    TemplateLogEntry entry;
    entry.site_id = site_id;
    entry.batch = mutation_templates(site_id, site_text, q, cfg.oracle);
    man.template_log.push_back(std::move(entry));
  }

  SearchBudget budget = SearchBudget::compute(k, cfg.t_max);
  man.max_calls = budget.max_calls;

  auto t_search = std::chrono::steady_clock::now();
  IopConfig iop_cfg = IopConfig::defaults_for(inst, cfg.ell);
  BlockVandermonde bv = build_block_vandermonde(plan);

  auto handle_triple = [&](const CandidateTriple& triple) -> bool {
    // Map the triple back onto pool positions.
    std::vector<std::uint8_t> delta(k, 0);
    std::vector<FieldElement> cvec(k, FieldElement::zero(q));
    for (std::size_t i = 0; i < triple.rows.size(); ++i) {
      for (std::size_t p = 0; p < pool.rows.size(); ++p) {
        if (pool.rows[p] == triple.rows[i]) {
          delta[p] = 1;
          cvec[p] = triple.constants[i];
        }
      }
    }

    Counterexample cex;
    std::string mutated;
    if (program) {
      std::map<std::string, FieldElement> subs;
      for (std::size_t i = 0; i < triple.rows.size(); ++i) {
        const std::string& sid =
            inst.weak_sites()[inst.row_site(triple.rows[i])].site_id;
        subs.emplace(sid, triple.constants[i]);
      }
      mutated = emit_mutated_source(*program_text, subs).source_text;
    }

    if (decision.zk_native) {
      ProveOptions popts;
      popts.attach_witness = cfg.attach_witness;
      ViolationProof proof;
      try {
        proof = prove(inst, pool.rows, plan, delta, cvec, triple.w_prime, y_orig,
                      iop_cfg, popts);
      } catch (const Error&) {
        return true;  // statement did not hold up under the prover's self-check
      }
      VerifyOutcome outcome = verify(proof, inst, pool.rows, plan, y_orig, iop_cfg);
      if (!outcome.accepted) return true;

      RecoveredEdit edit = extract_selection(proof, inst, plan, bv, outcome);
      if (edit.delta != delta || edit.c != cvec) {
        throw Error(Errc::kInvariantError, "extraction diverged from the proven edit");
      }
      std::optional<Witness> w_int = interpolate_witness(proof, inst, outcome);
      ReconstructionResult recon =
          reconstruct_witness(inst, pool.rows, edit, triple.inputs);
      Witness w_final;
      if (w_int) {
        // Branch equivalence: both extraction routes must agree.
        if (!recon.underdetermined && w_int->values != recon.witness.values) {
          throw Error(Errc::kInvariantError, "extractor branches disagree");
        }
        edit.source = WitnessSource::kInterpolatedWitness;
        w_final = *w_int;
      } else {
        edit.source = WitnessSource::kLinearReconstruction;
        w_final = recon.witness;
      }
      cex = assemble_counterexample(inst, pool.rows, edit, w_final, y_orig, mutated);
      cex.underdetermined = recon.underdetermined && !w_int;
      result.proof = proof;
    } else {
      RecoveredEdit edit;
      edit.delta = delta;
      edit.c = cvec;
      edit.source = WitnessSource::kLinearReconstruction;
      cex = assemble_counterexample(inst, pool.rows, edit, triple.w_prime, y_orig,
                                    mutated);
    }

    if (cfg.confirm_replay && program) {
      std::map<std::string, FieldElement> env;
      std::size_t xi = 0;
      for (const auto& st : program->statements) {
        if (st.kind == Statement::Kind::kSignal && st.signal.is_input) {
          // inputs bind in declaration order against the trace partition
          std::vector<FieldElement> all_inputs;
          for (const auto& [idx, v] : triple.inputs) all_inputs.push_back(v);
          if (xi < all_inputs.size()) env[st.signal.name] = all_inputs[xi++];
        }
      }
      Program mutated_prog = parse_program(cex.mutated_source);
      ProgramRun run = run_program(mutated_prog, q, env);
      cex.replayed = !run.constraint_violated;
    }

    result.counterexample = cex;
    result.all_counterexamples.push_back(std::move(cex));
    man.found = true;
    return cfg.find_all;
  };

  SearchStats stats = fallback_search(inst, pool, budget, man.template_log,
                                      original_witness, cfg, handle_triple);
  man.subset_evaluations = stats.subset_evaluations;
  man.candidates_tried = stats.candidates_tried;
  man.budget_exhausted = stats.budget_exhausted && !man.found;

  // Appendix-style greedy cover when the budget is below the apparent
  // required cardinality.
  if (!man.found) {
    std::vector<EligibleSite> sites;
    for (std::size_t p = 0; p < pool.rows.size(); ++p) {
      std::uint32_t row = pool.rows[p];
      if (!inst.row_is_weak(row) || inst.site_var(row) < 0) continue;
      EligibleSite s;
      s.pool_pos = p;
      s.row = row;
      s.site_id = inst.weak_sites()[inst.row_site(row)].site_id;
      for (const auto& entry : man.template_log) {
        if (entry.site_id != s.site_id) continue;
        for (const auto& cand : entry.batch.candidates) {
          try {
            s.constants.push_back(eval_expression(*parse_expression(cand), q, {}));
          } catch (const Error&) {
          }
        }
      }
      if (!s.constants.empty()) sites.push_back(std::move(s));
    }
    if (cfg.t_max < sites.size()) {
      std::vector<std::map<std::uint32_t, FieldElement>> probes = {
          input_map_of(inst, original_witness)};
      GreedyResult greedy = greedy_cover(inst, sites, probes, y_orig);
      man.greedy_cover_attempted = greedy.attempted;
      man.greedy_cover_size = greedy.cover_size;
      man.greedy_cover_bound = "<= 2*t_star";
      if (greedy.success) handle_triple(greedy.triple);
    }
  }

  auto t_end = std::chrono::steady_clock::now();
  std::map<std::string, double> timings;
  timings["total_ms"] =
      std::chrono::duration<double, std::milli>(t_end - t_start).count();
  timings["search_ms"] =
      std::chrono::duration<double, std::milli>(t_end - t_search).count();
  emit_files(result, inst, pool, y_orig, cfg, timings);

  result.exit_code = man.found ? 0 : 1;
  return result;
}

}  // namespace zkcraft
