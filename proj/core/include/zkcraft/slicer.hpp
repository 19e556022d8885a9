#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zkcraft/circuit.hpp"
#include "zkcraft/ff.hpp"

namespace zkcraft {

enum class ScoreConvention { kMethodology, kToy };

struct SlicerConfig {
  mpq_class score_lambda = 1;
  mpq_class score_mu = mpq_class(1, 2);
  std::uint32_t pool_size = 8;
  ScoreConvention convention = ScoreConvention::kMethodology;
};

struct RowDiagnostics {
  std::uint32_t row_index = 0;
  std::uint32_t kappa_w = 0;
  std::uint32_t kappa_c = 0;
  std::uint64_t fingerprint = 0;
  mpq_class score;
  /// Toy convention with kappa_c == 0: the score is undefined and the row
  /// ranks after every scored row.
  bool ranks_last = false;
};

struct CandidatePool {
  std::vector<std::uint32_t> rows;  // selection order
  std::vector<RowDiagnostics> diagnostics;  // one per constraint row
};

/// Support counts of row i against the W / K partition.
std::pair<std::uint32_t, std::uint32_t> row_diagnostics(const R1csInstance& inst,
                                                        std::uint32_t i);

/// Trunc64(SHA256(canonical row bytes || LE64(kappa_w) || LE64(kappa_c))).
/// Canonical row bytes: the three sparse vectors in A,B,C order, separated by
/// tags 0xA1/0xB1/0xC1, each term as LE64(index) followed by the coefficient's
/// length-prefixed big-endian bytes.
std::uint64_t row_fingerprint(const R1csInstance& inst, std::uint32_t i,
                              std::uint32_t kappa_w, std::uint32_t kappa_c);

/// Methodology convention: lambda*kc/(kw+1) - mu*kw, smallest first.
/// Toy convention: lambda*(kw+1)/kc - mu*kw (kc > 0), largest first.
mpq_class row_score(std::uint32_t kappa_w, std::uint32_t kappa_c,
                    const SlicerConfig& cfg, bool* ranks_last = nullptr);

CandidatePool select_pool(const R1csInstance& inst, const SlicerConfig& cfg);

std::string slicer_report_json(const CandidatePool& pool, const SlicerConfig& cfg);

}  // namespace zkcraft
