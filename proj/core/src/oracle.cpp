#include "zkcraft/oracle.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cstring>
#include <set>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "zkcraft/sha256.hpp"
#include "zkcraft/synth.hpp"

namespace zkcraft {

std::string canonicalize(const std::string& template_text) {
  std::ostringstream out;
  std::istringstream in(template_text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    std::size_t slash = line.find("//");
    if (slash != std::string::npos) line = line.substr(0, slash);

    // Collapse whitespace runs, trim, normalize decimal literals.
    std::string norm;
    bool in_space = true;  // leading spaces dropped
    for (std::size_t i = 0; i < line.size();) {
      char ch = line[i];
      if (ch == ' ' || ch == '\t') {
        if (!in_space) norm.push_back(' ');
        in_space = true;
        ++i;
        continue;
      }
      in_space = false;
      bool ident_before =
          !norm.empty() && (std::isalnum(static_cast<unsigned char>(norm.back())) ||
                            norm.back() == '_' || norm.back() == '$');
      if (std::isdigit(static_cast<unsigned char>(ch)) && !ident_before) {
        std::size_t start = i;
        while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) {
          ++i;
        }
        std::string digits = line.substr(start, i - start);
        std::size_t nz = digits.find_first_not_of('0');
        norm += nz == std::string::npos ? "0" : digits.substr(nz);
        continue;
      }
      norm.push_back(ch);
      ++i;
    }
    while (!norm.empty() && norm.back() == ' ') norm.pop_back();
    if (norm.empty()) continue;
    if (!first) out << '\n';
    out << norm;
    first = false;
  }
  return out.str();
}

std::uint64_t template_fingerprint(const std::string& canonical_text) {
  return trunc64(sha256(canonical_text));
}

std::string mutation_prompt(const std::string& weak_assign) {
  std::string prompt =
      "You are given the following Circom weak assignment on field F_q.\n"
      "Change only the right-hand side.\n"
      "Produce five semantically equivalent variants that bias values to edge "
      "cases (0, q-1, small constants).\n"
      "Output one RHS per line, no comments.\n"
      "------\n";
  prompt += weak_assign;
  return prompt;
}

namespace {

std::vector<std::string> split_nonempty_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    bool blank = true;
    for (char c : line) {
      if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
    }
    if (!blank) out.push_back(line);
  }
  return out;
}

/// An RHS candidate may arrive as a bare expression or as a full
/// "name <== expr;" line; both normalize to the expression text.
std::optional<std::string> extract_rhs(const std::string& line) {
  std::string s = line;
  std::size_t op = s.find("<==");
  if (op != std::string::npos) s = s.substr(op + 3);
  std::size_t semi = s.rfind(';');
  if (semi != std::string::npos) s = s.substr(0, semi);
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return std::nullopt;
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::optional<std::string> invoke_subprocess_oracle(const std::string& command,
                                                    const std::string& prompt) {
  int in_pipe[2];
  int out_pipe[2];
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0) return std::nullopt;
  pid_t pid = fork();
  if (pid < 0) return std::nullopt;
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), (char*)nullptr);
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  std::size_t off = 0;
  while (off < prompt.size()) {
    ssize_t n = write(in_pipe[1], prompt.data() + off, prompt.size() - off);
    if (n <= 0) break;
    off += std::size_t(n);
  }
  close(in_pipe[1]);
  std::string response;
  char buf[4096];
  ssize_t n;
  while ((n = read(out_pipe[0], buf, sizeof(buf))) > 0) {
    response.append(buf, std::size_t(n));
    if (response.size() > (1u << 20)) break;  // cap untrusted output
  }
  close(out_pipe[0]);
  int status = 0;
  waitpid(pid, &status, 0);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return std::nullopt;
  return response;
}

TemplateBatch mutation_templates(const std::string& site_id,
                                 const std::string& weak_assign_text,
                                 const FieldModulus* q, const OracleConfig& cfg) {
  TemplateBatch batch;
  batch.site_id = site_id;

  std::vector<std::string> raw;
  if (cfg.kind != OracleKind::kBuiltin) {
    std::string prompt = mutation_prompt(weak_assign_text);
    std::optional<std::string> response;
    if (cfg.kind == OracleKind::kSubprocess) {
      response = invoke_subprocess_oracle(cfg.target, prompt);
    } else {
      response = invoke_http_oracle(cfg.target, prompt, 5);
    }
    if (response) {
      raw = split_nonempty_lines(*response);
      batch.provenance = Provenance::kExternal;
      batch.tool_id = cfg.target;
    } else {
      batch.external_failed = true;
      batch.rejected.push_back("external generator unavailable; builtin fallback");
    }
  }
  if (raw.empty()) {
    if (batch.provenance == Provenance::kExternal) {
      batch.external_failed = true;
      batch.rejected.push_back("external generator returned nothing; builtin fallback");
      batch.provenance = Provenance::kBuiltin;
      batch.tool_id.clear();
    }
    // Builtin deterministic batch: edge values and small constants.
    mpz_class qm1 = q->value() - 1;
    raw = {"0", qm1.get_str(), "1", "2", "10"};
  }

  std::set<std::uint64_t> seen;
  for (const auto& line : raw) {
    if (batch.candidates.size() >= 5) break;
    auto rhs = extract_rhs(line);
    if (!rhs) {
      batch.rejected.push_back("empty candidate");
      continue;
    }
    std::string canon = canonicalize(*rhs);
    if (canon.empty()) {
      batch.rejected.push_back("comment-only candidate");
      continue;
    }
    std::uint64_t fp = template_fingerprint(canon);
    if (!seen.insert(fp).second) {
      batch.rejected.push_back("duplicate: " + canon);
      continue;
    }
    try {
      (void)parse_expression(canon);
    } catch (const Error&) {
      batch.rejected.push_back("parse error: " + canon);
      continue;
    }
    batch.candidates.push_back(canon);
    batch.fingerprints.push_back(fp);
  }

  if (batch.candidates.empty()) {
    // Everything failed validation: deterministic seeded fallback constant.
    FieldElement c = seeded_fallback_constant(cfg.seed, site_id, q);
    std::string canon = canonicalize(c.to_decimal());
    batch.candidates.push_back(canon);
    batch.fingerprints.push_back(template_fingerprint(canon));
    batch.provenance = Provenance::kBuiltin;
    batch.external_failed = true;
    batch.rejected.push_back("all candidates invalid; seeded fallback constant");
  }
  return batch;
}

std::string pattern_prompt(const std::string& counterexample_json) {
  std::string prompt =
      "Given the following TCCT counter-example, emit:\n"
      "1. A one-sentence trigger description.\n"
      "2. A Rust function fn sample() -> Vec<F> that biases inputs toward this "
      "divergence.\n"
      "------\n";
  prompt += counterexample_json;
  return prompt;
}

SamplerSpec pattern_sampler(const Counterexample& cex, const FieldModulus* q,
                            const OracleConfig& cfg) {
  bool diverges = false;
  for (std::size_t j = 0; j < cex.trace.y.size() && j < cex.y_orig.size(); ++j) {
    if (cex.trace.y[j] != cex.y_orig[j]) diverges = true;
  }
  if (!diverges) {
    throw Error(Errc::kShapeMismatch, "pattern oracle needs a diverging counterexample");
  }

  SamplerSpec spec;
  spec.seed = cfg.seed;
  spec.trigger_description =
      "inputs near the recovered counterexample assignment reproduce the divergence";

  if (cfg.kind != OracleKind::kBuiltin) {
    std::string prompt = pattern_prompt(counterexample_to_json(cex));
    std::optional<std::string> response;
    if (cfg.kind == OracleKind::kSubprocess) {
      response = invoke_subprocess_oracle(cfg.target, prompt);
    } else {
      response = invoke_http_oracle(cfg.target, prompt, 1);
    }
    if (response) {
      // Declarative bias list: {"trigger": "...", "bias": [[["v", w], ...], ...]}
      try {
        nlohmann::json j = nlohmann::json::parse(*response);
        SamplerSpec ext;
        ext.seed = cfg.seed;
        ext.trigger_description = j.at("trigger").get<std::string>();
        for (const auto& coord : j.at("bias")) {
          std::vector<BiasEntry> entries;
          for (const auto& pair : coord) {
            FieldElement v =
                FieldElement::from_decimal(pair.at(0).get<std::string>(), q);
            std::uint32_t w = pair.at(1).get<std::uint32_t>();
            if (w == 0) throw Error(Errc::kSchemaError, "zero weight");
            entries.push_back({v, w});
          }
          ext.per_input_bias.push_back(std::move(entries));
        }
        return ext;
      } catch (...) {
        // fall through to the builtin bias; uniform would also be sound
      }
    }
  }

  for (const auto& x : cex.trace.x) {
    std::vector<BiasEntry> entries;
    entries.push_back({x, 8});
    entries.push_back({x + FieldElement::one(q), 2});
    entries.push_back({x - FieldElement::one(q), 2});
    spec.per_input_bias.push_back(std::move(entries));
  }
  return spec;
}

FieldElement seeded_fallback_constant(std::uint64_t seed, const std::string& site_id,
                                      const FieldModulus* q) {
  mpz_class bound;
  mpz_ui_pow_ui(bound.get_mpz_t(), 2, 256);
  mpz_class limit = (bound / q->value()) * q->value();
  for (std::uint64_t ctr = 0;; ++ctr) {
    Sha256 h;
    std::uint8_t s8[8];
    for (int i = 0; i < 8; ++i) s8[i] = std::uint8_t(seed >> (8 * i));
    h.update(s8, 8);
    h.update(site_id);
    if (ctr > 0) {
      std::uint8_t c8[8];
      for (int i = 0; i < 8; ++i) c8[i] = std::uint8_t(ctr >> (8 * i));
      h.update(c8, 8);
    }
    Digest d = h.finish();
    mpz_class x;
    mpz_import(x.get_mpz_t(), d.size(), 1, 1, 0, 0, d.data());
    if (x < limit) return FieldElement(x % q->value(), q);
  }
}

std::optional<std::string> invoke_http_oracle(const std::string& url,
                                              const std::string& prompt,
                                              std::uint32_t max_candidates) {
  // url forms accepted: "http://host:port/path" or "host:port/path".
  std::string rest = url;
  if (rest.rfind("http://", 0) == 0) rest = rest.substr(7);
  std::size_t slash = rest.find('/');
  std::string host_port = slash == std::string::npos ? rest : rest.substr(0, slash);
  std::string path = slash == std::string::npos ? "/" : rest.substr(slash);
  httplib::Client client(("http://" + host_port).c_str());
  client.set_connection_timeout(2, 0);
  client.set_read_timeout(10, 0);
  nlohmann::json body;
  body["prompt"] = prompt;
  body["max_candidates"] = max_candidates;
  auto res = client.Post(path.c_str(), body.dump(), "application/json");
  if (!res || res->status != 200) return std::nullopt;
  return res->body;
}

FieldElement sample_biased(const std::vector<BiasEntry>& bias, std::uint64_t seed,
                           std::uint64_t counter, const FieldModulus* q) {
  Sha256 h;
  std::uint8_t b[16];
  for (int i = 0; i < 8; ++i) b[i] = std::uint8_t(seed >> (8 * i));
  for (int i = 0; i < 8; ++i) b[8 + i] = std::uint8_t(counter >> (8 * i));
  h.update(b, 16);
  Digest d = h.finish();
  std::uint64_t r = trunc64(d);

  std::uint64_t total = 0;
  for (const auto& e : bias) total += e.weight;
  std::uint64_t uniform_weight = total == 0 ? 1 : std::max<std::uint64_t>(1, total / 3);
  std::uint64_t grand = total + uniform_weight;
  std::uint64_t pick = r % grand;
  for (const auto& e : bias) {
    if (pick < e.weight) return e.value;
    pick -= e.weight;
  }
  // Uniform tail: derive a fresh element from the remaining digest bytes.
  mpz_class x;
  mpz_import(x.get_mpz_t(), d.size(), 1, 1, 0, 0, d.data());
  return FieldElement(x % q->value(), q);
}

}  // namespace zkcraft
