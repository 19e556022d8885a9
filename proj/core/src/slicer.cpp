#include "zkcraft/slicer.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "zkcraft/sha256.hpp"

namespace zkcraft {

std::pair<std::uint32_t, std::uint32_t> row_diagnostics(const R1csInstance& inst,
                                                        std::uint32_t i) {
  if (i >= inst.num_constraints()) {
    throw Error(Errc::kIndexOutOfRange, "row_diagnostics row index");
  }
  const ConstraintRow& r = inst.rows()[i];
  std::set<std::uint32_t> support;
  for (const auto* v : {&r.a, &r.b, &r.c}) {
    for (const auto& t : *v) support.insert(t.index);
  }
  std::uint32_t kw = 0, kc = 0;
  for (std::uint32_t idx : support) {
    if (inst.in_k(idx)) {
      ++kc;
    } else {
      ++kw;
    }
  }
  return {kw, kc};
}

namespace {

void put_le64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

void append_sparse(std::vector<std::uint8_t>& out, const SparseVec& v) {
  for (const auto& t : v) {
    put_le64(out, t.index);
    t.coeff.append_bytes(out);
  }
}

}  // namespace

std::uint64_t row_fingerprint(const R1csInstance& inst, std::uint32_t i,
                              std::uint32_t kappa_w, std::uint32_t kappa_c) {
  if (i >= inst.num_constraints()) {
    throw Error(Errc::kIndexOutOfRange, "row_fingerprint row index");
  }
  const ConstraintRow& r = inst.rows()[i];
  std::vector<std::uint8_t> bytes;
  bytes.push_back(0xA1);
  append_sparse(bytes, r.a);
  bytes.push_back(0xB1);
  append_sparse(bytes, r.b);
  bytes.push_back(0xC1);
  append_sparse(bytes, r.c);
  put_le64(bytes, kappa_w);
  put_le64(bytes, kappa_c);
  return trunc64(sha256(bytes));
}

mpq_class row_score(std::uint32_t kappa_w, std::uint32_t kappa_c,
                    const SlicerConfig& cfg, bool* ranks_last) {
  if (ranks_last) *ranks_last = false;
  if (cfg.convention == ScoreConvention::kMethodology) {
    mpq_class ratio(kappa_c, kappa_w + 1);
    ratio.canonicalize();
    mpq_class s = cfg.score_lambda * ratio - cfg.score_mu * mpq_class(kappa_w);
    s.canonicalize();
    return s;
  }
  // Toy convention.
  if (kappa_c == 0) {
    if (ranks_last) *ranks_last = true;
    return mpq_class(0);
  }
  mpq_class ratio(kappa_w + 1, kappa_c);
  ratio.canonicalize();
  mpq_class s = cfg.score_lambda * ratio - cfg.score_mu * mpq_class(kappa_w);
  s.canonicalize();
  return s;
}

CandidatePool select_pool(const R1csInstance& inst, const SlicerConfig& cfg) {
  if (inst.num_constraints() == 0) {
    throw Error(Errc::kEmptyInstance, "select_pool on empty instance");
  }
  if (cfg.pool_size == 0) throw Error(Errc::kInvariantError, "pool_size must be >= 1");
  if (cfg.score_lambda <= 0 || cfg.score_mu < 0) {
    throw Error(Errc::kInvariantError, "score weights must be positive");
  }

  CandidatePool pool;
  pool.diagnostics.reserve(inst.num_constraints());
  for (std::uint32_t i = 0; i < inst.num_constraints(); ++i) {
    RowDiagnostics d;
    d.row_index = i;
    auto [kw, kc] = row_diagnostics(inst, i);
    d.kappa_w = kw;
    d.kappa_c = kc;
    d.fingerprint = row_fingerprint(inst, i, kw, kc);
    d.score = row_score(kw, kc, cfg, &d.ranks_last);
    pool.diagnostics.push_back(std::move(d));
  }

  std::vector<std::uint32_t> order(inst.num_constraints());
  for (std::uint32_t i = 0; i < inst.num_constraints(); ++i) order[i] = i;
  bool smallest_first = cfg.convention == ScoreConvention::kMethodology;
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    const RowDiagnostics& da = pool.diagnostics[a];
    const RowDiagnostics& db = pool.diagnostics[b];
    if (da.ranks_last != db.ranks_last) return db.ranks_last;
    if (da.score != db.score) {
      return smallest_first ? da.score < db.score : da.score > db.score;
    }
    return a < b;
  });

  std::size_t take = std::min<std::size_t>(cfg.pool_size, order.size());
  pool.rows.assign(order.begin(), order.begin() + take);
  return pool;
}

std::string slicer_report_json(const CandidatePool& pool, const SlicerConfig& cfg) {
  nlohmann::ordered_json j;
  j["score_convention"] =
      cfg.convention == ScoreConvention::kMethodology ? "methodology" : "toy";
  j["lambda"] = cfg.score_lambda.get_str();
  j["mu"] = cfg.score_mu.get_str();
  j["pool_size"] = cfg.pool_size;
  j["pool"] = pool.rows;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& d : pool.diagnostics) {
    nlohmann::ordered_json r;
    r["row"] = d.row_index;
    r["kappa_w"] = d.kappa_w;
    r["kappa_c"] = d.kappa_c;
    char fp[19];
    std::snprintf(fp, sizeof(fp), "0x%016llx",
                  static_cast<unsigned long long>(d.fingerprint));
    r["fingerprint"] = fp;
    r["score"] = d.ranks_last ? std::string("unranked") : d.score.get_str();
    rows.push_back(std::move(r));
  }
  j["diagnostics"] = std::move(rows);
  return j.dump(2) + "\n";
}

}  // namespace zkcraft
