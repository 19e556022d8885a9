// zkcraft command line: trace-constraint inconsistency localization over
// R1CS instances, with proof-bearing counterexamples.
//
//   zkcraft analyze <circuit.(json|r1cs)> [--witness w.json] [options]
//   zkcraft verify  <proof.bin> <circuit.(json|r1cs)> [options]
//
// Exit codes: 0 = counterexample found / proof verifies, 1 = none / reject,
// 2 = usage or processing error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "zkcraft/driver.hpp"

using namespace zkcraft;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIoError, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::string s = read_file(path);
  return std::vector<std::uint8_t>(s.begin(), s.end());
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

R1csInstance load_circuit(const std::string& path, const std::string& sites_path,
                          const std::string& field_override) {
  R1csInstance inst = [&]() {
    if (ends_with(path, ".r1cs")) {
      return parse_r1cs_binary(read_file_bytes(path));
    }
    return parse_circuit_json(read_file(path));
  }();
  if (!sites_path.empty()) {
    inst = apply_sites_json(inst, read_file(sites_path));
  }
  if (!field_override.empty()) {
    const FieldModulus* want =
        (field_override == "test101" || field_override == "bn254scalar")
            ? FieldModulus::preset(field_override)
            : FieldModulus::from_decimal(field_override);
    if (want != inst.modulus()) {
      throw Error(Errc::kSchemaError,
                  "--field disagrees with the circuit's modulus");
    }
  }
  return inst;
}

mpq_class parse_rational(const std::string& s) {
  // Accepts "3", "1/3" and simple decimals like "0.5".
  std::size_t dot = s.find('.');
  if (dot != std::string::npos) {
    std::string digits = s.substr(0, dot) + s.substr(dot + 1);
    mpz_class num(digits);
    mpz_class den = 1;
    for (std::size_t i = 0; i < s.size() - dot - 1; ++i) den *= 10;
    mpq_class r(num, den);
    r.canonicalize();
    return r;
  }
  mpq_class r(s);
  r.canonicalize();
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zkcraft: localize trace-constraint inconsistencies in R1CS "
               "with proof-bearing counterexamples"};
  app.require_subcommand(1);

  // --- analyze ---
  auto* analyze = app.add_subcommand("analyze", "search a circuit for a counterexample");
  std::string circuit_path, sites_path, witness_path, program_path, field;
  std::string lambda = "1", mu = "1/2", convention = "methodology";
  std::string backend = "auto", oracle = "builtin", out_dir = "zkcraft-out";
  std::uint32_t pool_size = 8, t_max = 3, ell = 2, workers = 1;
  std::uint64_t seed = 0, oracle_seed = 0;
  bool attach_witness = false, confirm_replay = false, emit_smt2 = false;
  bool find_all = false, no_site_solve = false;
  double gamma = 0, gamma_star = 0;
  bool have_gamma = false, have_gamma_star = false;

  analyze->add_option("circuit", circuit_path, "circuit file (.json or .r1cs)")
      ->required();
  analyze->add_option("--sites", sites_path, "weak-site sidecar JSON (for .r1cs)");
  analyze->add_option("--witness", witness_path, "original witness JSON")->required();
  analyze->add_option("--program", program_path, "original circom-subset source");
  analyze->add_option("--field", field, "field preset or decimal modulus (checked)");
  analyze->add_option("--pool-size", pool_size, "candidate pool size k");
  analyze->add_option("--t-max", t_max, "maximum edit cardinality");
  analyze->add_option("--lambda", lambda, "score weight lambda");
  analyze->add_option("--mu", mu, "score weight mu");
  analyze->add_option("--score-convention", convention, "methodology | toy");
  analyze->add_option("--backend", backend, "auto | basefold | hyperplonk");
  analyze->add_option("--oracle", oracle,
                      "builtin | subprocess:<cmd> | http:<url>");
  analyze->add_option("--oracle-seed", oracle_seed, "oracle PRF seed");
  analyze->add_option("--seed", seed, "run seed");
  analyze->add_option("--ell", ell, "independent opening points");
  analyze->add_option("--workers", workers, "candidate evaluation threads");
  analyze->add_option("--out-dir", out_dir, "artifact output directory");
  analyze->add_flag("--attach-witness", attach_witness,
                    "append the witness polynomial to proofs");
  analyze->add_flag("--confirm-replay", confirm_replay,
                    "re-run the mutated program for the report");
  analyze->add_flag("--emit-smt2", emit_smt2, "emit SMT-LIB2 queries per cardinality");
  analyze->add_flag("--find-all", find_all, "keep searching after the first hit");
  analyze->add_flag("--no-site-solve", no_site_solve,
                    "disable algebraic refinement of template constants");
  analyze->add_option("--gamma", gamma, "fingerprint ROC score gamma")
      ->each([&](const std::string&) { have_gamma = true; });
  analyze->add_option("--gamma-star", gamma_star, "population threshold gamma*")
      ->each([&](const std::string&) { have_gamma_star = true; });

  // --- verify ---
  auto* verify_cmd =
      app.add_subcommand("verify", "re-verify a proof and re-extract the counterexample");
  std::string v_proof, v_circuit, v_sites;
  verify_cmd->add_option("proof", v_proof, "proof file (.bin)")->required();
  verify_cmd->add_option("circuit", v_circuit, "circuit file (.json or .r1cs)")
      ->required();
  verify_cmd->add_option("--sites", v_sites, "weak-site sidecar JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*analyze) {
      R1csInstance inst = load_circuit(circuit_path, sites_path, field);
      Witness w = parse_witness_json(read_file(witness_path), inst.modulus());
      std::optional<std::string> program;
      if (!program_path.empty()) program = read_file(program_path);

      DriverConfig cfg;
      cfg.slicer.pool_size = pool_size;
      cfg.slicer.score_lambda = parse_rational(lambda);
      cfg.slicer.score_mu = parse_rational(mu);
      if (convention == "methodology") {
        cfg.slicer.convention = ScoreConvention::kMethodology;
      } else if (convention == "toy") {
        cfg.slicer.convention = ScoreConvention::kToy;
      } else {
        std::cerr << "unknown score convention: " << convention << "\n";
        return 2;
      }
      cfg.t_max = t_max;
      cfg.ell = ell;
      cfg.attach_witness = attach_witness;
      cfg.confirm_replay = confirm_replay;
      cfg.emit_smt2 = emit_smt2;
      cfg.find_all = find_all;
      cfg.enable_site_solve = !no_site_solve;
      cfg.backend = backend;
      cfg.seed = seed;
      cfg.workers = workers;
      cfg.out_dir = out_dir;
      cfg.circuit_name =
          std::filesystem::path(circuit_path).stem().string();
      if (oracle == "builtin") {
        cfg.oracle.kind = OracleKind::kBuiltin;
      } else if (oracle.rfind("subprocess:", 0) == 0) {
        cfg.oracle.kind = OracleKind::kSubprocess;
        cfg.oracle.target = oracle.substr(11);
      } else if (oracle.rfind("http:", 0) == 0) {
        cfg.oracle.kind = OracleKind::kHttp;
        cfg.oracle.target = oracle.substr(5);
      } else {
        std::cerr << "unknown oracle spec: " << oracle << "\n";
        return 2;
      }
      cfg.oracle.seed = oracle_seed;
      if (have_gamma) cfg.gamma = gamma;
      if (have_gamma_star) cfg.gamma_star = gamma_star;

      RunResult result = run_pipeline(inst, program, w, cfg);
      if (result.counterexample) {
        std::cout << "counterexample found\n"
                  << counterexample_to_json(*result.counterexample);
        if (!result.manifest.proof_file.empty()) {
          std::cout << "proof:   " << result.manifest.proof_file << "\n";
        }
      } else {
        std::cout << "none (subset evaluations: "
                  << result.manifest.subset_evaluations << "/"
                  << result.manifest.max_calls << ")\n";
      }
      if (!cfg.out_dir.empty()) {
        std::cout << "manifest: " << cfg.out_dir << "/" << cfg.circuit_name
                  << ".manifest.json\n";
      }
      return result.exit_code;
    }

    if (*verify_cmd) {
      R1csInstance inst = load_circuit(v_circuit, v_sites, "");
      ViolationProof proof = parse_proof(read_file_bytes(v_proof));
      NodePlan plan =
          choose_nodes(inst.modulus(), proof.k, proof.d_row, proof.d_sel);
      IopConfig cfg;
      cfg.domain_log = proof.t;
      cfg.repetitions = proof.ell;
      cfg.output_points = proof.u_points;
      VerifyOutcome out =
          verify(proof, inst, proof.pool_rows, plan, proof.y_orig, cfg);
      if (!out.accepted) {
        std::cout << "reject: " << reject_reason_name(out.reason) << " ("
                  << out.detail << ")\n";
        return 1;
      }
      std::cout << "accept\n";
      BlockVandermonde bv = build_block_vandermonde(plan);
      RecoveredEdit edit = extract_selection(proof, inst, plan, bv, out);
      std::optional<Witness> w_int = interpolate_witness(proof, inst, out);
      Witness w_final;
      if (w_int) {
        edit.source = WitnessSource::kInterpolatedWitness;
        w_final = *w_int;
      } else {
        std::map<std::uint32_t, FieldElement> pinned;
        ReconstructionResult recon =
            reconstruct_witness(inst, proof.pool_rows, edit, pinned);
        edit.source = WitnessSource::kLinearReconstruction;
        w_final = recon.witness;
      }
      Counterexample cex = assemble_counterexample(inst, proof.pool_rows, edit,
                                                   w_final, proof.y_orig);
      std::cout << counterexample_to_json(cex);
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
