#include "zkcraft/circuit.hpp"

#include <algorithm>
#include <cstring>
#include <set>

#include <json.hpp>

namespace zkcraft {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

const char* var_class_name(VarClass c) {
  switch (c) {
    case VarClass::kOne: return "one";
    case VarClass::kPublicInput: return "pub_in";
    case VarClass::kPublicOutput: return "pub_out";
    case VarClass::kPrivateInput: return "priv_in";
    case VarClass::kIntermediate: return "inter";
  }
  return "?";
}

VarClass var_class_from_name(const std::string& s) {
  if (s == "one") return VarClass::kOne;
  if (s == "pub_in") return VarClass::kPublicInput;
  if (s == "pub_out") return VarClass::kPublicOutput;
  if (s == "priv_in") return VarClass::kPrivateInput;
  if (s == "inter") return VarClass::kIntermediate;
  throw Error(Errc::kSchemaError, "unknown var class: " + s);
}

R1csInstance::R1csInstance(const FieldModulus* modulus, std::uint32_t num_vars,
                           std::vector<ConstraintRow> rows,
                           std::vector<VarClass> var_classes,
                           std::vector<WeakSite> weak_sites)
    : modulus_(modulus),
      num_vars_(num_vars),
      rows_(std::move(rows)),
      var_classes_(std::move(var_classes)),
      weak_sites_(std::move(weak_sites)) {
  if (var_classes_.size() != num_vars_) {
    throw Error(Errc::kInvariantError, "var_classes size != num_vars");
  }
  if (num_vars_ == 0 || var_classes_[0] != VarClass::kOne) {
    throw Error(Errc::kInvariantError, "wire 0 must be the constant-one wire");
  }
  for (std::uint32_t i = 1; i < num_vars_; ++i) {
    if (var_classes_[i] == VarClass::kOne) {
      throw Error(Errc::kInvariantError, "only wire 0 may carry class one");
    }
  }
  auto check_vec = [&](const SparseVec& v) {
    std::uint32_t prev = 0;
    bool first = true;
    for (const auto& t : v) {
      if (t.index >= num_vars_) {
        throw Error(Errc::kInvariantError, "coefficient index out of range");
      }
      if (!first && t.index <= prev) {
        throw Error(Errc::kInvariantError, "sparse terms not strictly ascending");
      }
      if (t.coeff.modulus() != modulus_) {
        throw Error(Errc::kModulusMismatch, "row coefficient field");
      }
      prev = t.index;
      first = false;
    }
  };
  for (const auto& r : rows_) {
    check_vec(r.a);
    check_vec(r.b);
    check_vec(r.c);
  }
  index_sites();
}

void R1csInstance::index_sites() {
  row_site_.assign(rows_.size(), -1);
  site_var_.assign(rows_.size(), -1);
  for (std::size_t s = 0; s < weak_sites_.size(); ++s) {
    for (std::uint32_t r : weak_sites_[s].rows) {
      if (r >= rows_.size()) {
        throw Error(Errc::kInvariantError, "weak site row out of range");
      }
      if (row_site_[r] != -1) {
        throw Error(Errc::kInvariantError, "row claimed by two weak sites");
      }
      row_site_[r] = int(s);
    }
  }
  // Resolve the variable each weak row defines: the single C-side term when
  // unique, otherwise the highest-index non-input wire not defined earlier.
  std::set<std::uint32_t> defined;
  for (std::uint32_t r = 0; r < rows_.size(); ++r) {
    if (row_site_[r] < 0) continue;
    const SparseVec& c = rows_[r].c;
    int var = -1;
    if (c.size() == 1 && c[0].index != 0) {
      var = int(c[0].index);
    } else {
      for (auto it = c.rbegin(); it != c.rend(); ++it) {
        VarClass vc = var_classes_[it->index];
        if (it->index == 0 || vc == VarClass::kPublicInput ||
            vc == VarClass::kPrivateInput) {
          continue;
        }
        if (defined.count(it->index)) continue;
        var = int(it->index);
        break;
      }
    }
    site_var_[r] = var;
    if (var >= 0) defined.insert(std::uint32_t(var));
  }
}

const ConstraintRow& R1csInstance::row(std::uint32_t i) const {
  if (i >= rows_.size()) throw Error(Errc::kIndexOutOfRange, "row index");
  return rows_[i];
}

bool R1csInstance::in_k(std::uint32_t var) const {
  VarClass c = var_classes_[var];
  return c == VarClass::kOne || c == VarClass::kPublicInput ||
         c == VarClass::kPublicOutput;
}

std::vector<std::uint32_t> R1csInstance::public_output_indices() const {
  std::vector<std::uint32_t> out;
  for (std::uint32_t i = 0; i < num_vars_; ++i) {
    if (var_classes_[i] == VarClass::kPublicOutput) out.push_back(i);
  }
  return out;
}

std::vector<std::uint32_t> R1csInstance::input_indices() const {
  std::vector<std::uint32_t> out;
  for (std::uint32_t i = 0; i < num_vars_; ++i) {
    if (var_classes_[i] == VarClass::kPublicInput ||
        var_classes_[i] == VarClass::kPrivateInput) {
      out.push_back(i);
    }
  }
  return out;
}

R1csInstance R1csInstance::edited(const std::vector<std::uint32_t>& rows,
                                  const std::vector<FieldElement>& constants) const {
  if (rows.size() != constants.size()) {
    throw Error(Errc::kShapeMismatch, "edited rows/constants size");
  }
  std::vector<ConstraintRow> new_rows = rows_;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::uint32_t r = rows[i];
    if (r >= rows_.size()) throw Error(Errc::kIndexOutOfRange, "edited row index");
    if (row_site_[r] < 0 || site_var_[r] < 0) {
      throw Error(Errc::kInvariantError, "edited row is not a usable weak site");
    }
    std::uint32_t sv = std::uint32_t(site_var_[r]);
    // site = const  encoded as  0*0 = site - const.
    ConstraintRow nr;
    if (!constants[i].is_zero()) {
      nr.c.push_back({0, -constants[i]});
    }
    nr.c.push_back({sv, FieldElement::one(modulus_)});
    new_rows[r] = std::move(nr);
  }
  return R1csInstance(modulus_, num_vars_, std::move(new_rows), var_classes_,
                      weak_sites_);
}

ExecutionTrace trace_from_witness(const R1csInstance& inst, const Witness& w) {
  if (w.values.size() != inst.num_vars()) {
    throw Error(Errc::kShapeMismatch, "witness size");
  }
  ExecutionTrace t;
  for (std::uint32_t i = 0; i < inst.num_vars(); ++i) {
    switch (inst.var_classes()[i]) {
      case VarClass::kOne: break;
      case VarClass::kPublicInput: t.x.push_back(w.values[i]); break;
      case VarClass::kPublicOutput: t.y.push_back(w.values[i]); break;
      case VarClass::kPrivateInput:
      case VarClass::kIntermediate: t.z.push_back(w.values[i]); break;
    }
  }
  return t;
}

Witness witness_from_trace(const R1csInstance& inst, const ExecutionTrace& t) {
  Witness w;
  w.values.assign(inst.num_vars(), FieldElement::zero(inst.modulus()));
  w.values[0] = FieldElement::one(inst.modulus());
  std::size_t xi = 0, zi = 0, yi = 0;
  for (std::uint32_t i = 0; i < inst.num_vars(); ++i) {
    switch (inst.var_classes()[i]) {
      case VarClass::kOne: break;
      case VarClass::kPublicInput:
        if (xi >= t.x.size()) throw Error(Errc::kShapeMismatch, "trace x size");
        w.values[i] = t.x[xi++];
        break;
      case VarClass::kPublicOutput:
        if (yi >= t.y.size()) throw Error(Errc::kShapeMismatch, "trace y size");
        w.values[i] = t.y[yi++];
        break;
      case VarClass::kPrivateInput:
      case VarClass::kIntermediate:
        if (zi >= t.z.size()) throw Error(Errc::kShapeMismatch, "trace z size");
        w.values[i] = t.z[zi++];
        break;
    }
  }
  if (xi != t.x.size() || zi != t.z.size() || yi != t.y.size()) {
    throw Error(Errc::kShapeMismatch, "trace has extra values");
  }
  return w;
}

FieldElement sparse_inner(const SparseVec& v, const Witness& w, const FieldModulus* q) {
  FieldElement acc = FieldElement::zero(q);
  for (const auto& t : v) acc += t.coeff * w.values[t.index];
  return acc;
}

ResidualVector eval_residuals(const R1csInstance& inst, const Witness& w) {
  if (w.values.size() != inst.num_vars()) {
    throw Error(Errc::kShapeMismatch, "witness size mismatch");
  }
  ResidualVector out;
  out.residuals.reserve(inst.num_constraints());
  const FieldModulus* q = inst.modulus();
  for (const auto& r : inst.rows()) {
    FieldElement av = sparse_inner(r.a, w, q);
    FieldElement bv = sparse_inner(r.b, w, q);
    FieldElement cv = sparse_inner(r.c, w, q);
    out.residuals.push_back(av * bv - cv);
  }
  return out;
}

bool check_tcct(const R1csInstance& inst, const ExecutionTrace& trace,
                const std::vector<FieldElement>& original_y) {
  Witness w = witness_from_trace(inst, trace);
  if (!eval_residuals(inst, w).all_zero()) return false;
  if (trace.y.size() != original_y.size()) {
    throw Error(Errc::kShapeMismatch, "output vector size");
  }
  return trace.y != original_y;
}

bool differential_check(const R1csInstance& inst, const Witness& base,
                        const std::map<std::uint32_t, FieldElement>& delta_z,
                        const std::map<std::uint32_t, FieldElement>& delta_y) {
  if (base.values.size() != inst.num_vars()) {
    throw Error(Errc::kShapeMismatch, "base witness size");
  }
  for (const auto& [idx, _] : delta_z) {
    if (idx >= inst.num_vars() ||
        inst.var_classes()[idx] != VarClass::kIntermediate) {
      throw Error(Errc::kShapeMismatch, "delta_z index not an intermediate wire");
    }
  }
  bool y_nonzero = false;
  for (const auto& [idx, d] : delta_y) {
    if (idx >= inst.num_vars() ||
        inst.var_classes()[idx] != VarClass::kPublicOutput) {
      throw Error(Errc::kShapeMismatch, "delta_y index not an output wire");
    }
    if (!d.is_zero()) y_nonzero = true;
  }
  if (!y_nonzero) return false;

  std::set<std::uint32_t> touched;
  for (const auto& [idx, d] : delta_z) {
    if (!d.is_zero()) touched.insert(idx);
  }
  for (const auto& [idx, d] : delta_y) {
    if (!d.is_zero()) touched.insert(idx);
  }

  auto patched = [&](std::uint32_t idx) {
    FieldElement v = base.values[idx];
    auto iz = delta_z.find(idx);
    if (iz != delta_z.end()) v += iz->second;
    auto iy = delta_y.find(idx);
    if (iy != delta_y.end()) v += iy->second;
    return v;
  };
  auto inner_patched = [&](const SparseVec& vec) {
    FieldElement acc = FieldElement::zero(inst.modulus());
    for (const auto& t : vec) acc += t.coeff * patched(t.index);
    return acc;
  };
  auto supports_touched = [&](const ConstraintRow& r) {
    for (const auto& t : r.a)
      if (touched.count(t.index)) return true;
    for (const auto& t : r.b)
      if (touched.count(t.index)) return true;
    for (const auto& t : r.c)
      if (touched.count(t.index)) return true;
    return false;
  };

  for (const auto& r : inst.rows()) {
    if (!supports_touched(r)) continue;
    FieldElement res = inner_patched(r.a) * inner_patched(r.b) - inner_patched(r.c);
    if (!res.is_zero()) return false;
  }
  return true;
}

std::vector<FieldElement> outputs_of(const R1csInstance& inst, const Witness& w) {
  std::vector<FieldElement> y;
  for (std::uint32_t i : inst.public_output_indices()) y.push_back(w.values[i]);
  return y;
}

ForwardResult run_forward(const R1csInstance& inst,
                          const std::map<std::uint32_t, FieldElement>& inputs) {
  const FieldModulus* q = inst.modulus();
  ForwardResult out;
  out.witness.values.assign(inst.num_vars(), FieldElement::zero(q));
  std::vector<bool> known(inst.num_vars(), false);
  out.witness.values[0] = FieldElement::one(q);
  known[0] = true;
  for (std::uint32_t i : inst.input_indices()) {
    auto it = inputs.find(i);
    if (it == inputs.end()) {
      throw Error(Errc::kShapeMismatch, "missing input value for wire " +
                                            std::to_string(i));
    }
    out.witness.values[i] = it->second;
    known[i] = true;
  }

  auto vec_known_except = [&](const SparseVec& v, int skip) {
    for (const auto& t : v) {
      if (int(t.index) == skip) continue;
      if (!known[t.index]) return false;
    }
    return true;
  };
  auto inner_known = [&](const SparseVec& v, int skip, const FieldElement** site_coeff) {
    FieldElement acc = FieldElement::zero(q);
    for (const auto& t : v) {
      if (int(t.index) == skip) {
        if (site_coeff) *site_coeff = &t.coeff;
        continue;
      }
      acc += t.coeff * out.witness.values[t.index];
    }
    return acc;
  };

  std::vector<bool> done(inst.num_constraints(), false);
  bool progress = true;
  while (progress) {
    progress = false;
    for (std::uint32_t r = 0; r < inst.num_constraints(); ++r) {
      if (done[r]) continue;
      const ConstraintRow& row = inst.rows()[r];
      int sv = inst.row_is_weak(r) ? inst.site_var(r) : -1;
      if (sv >= 0 && !known[sv]) {
        if (!vec_known_except(row.a, -1) || !vec_known_except(row.b, -1) ||
            !vec_known_except(row.c, sv)) {
          continue;
        }
        const FieldElement* coeff = nullptr;
        FieldElement rest = inner_known(row.c, sv, &coeff);
        FieldElement ab = inner_known(row.a, -1, nullptr) * inner_known(row.b, -1, nullptr);
        if (coeff == nullptr || coeff->is_zero()) {
          continue;  // degenerate site row; treated as a plain check below
        }
        out.witness.values[sv] = (ab - rest) * coeff->inv();
        known[sv] = true;
        done[r] = true;
        progress = true;
        continue;
      }
      // Either a strong row or a weak row whose site is already known: check.
      if (vec_known_except(row.a, -1) && vec_known_except(row.b, -1) &&
          vec_known_except(row.c, -1)) {
        FieldElement res = inner_known(row.a, -1, nullptr) *
                               inner_known(row.b, -1, nullptr) -
                           inner_known(row.c, -1, nullptr);
        if (!res.is_zero()) {
          out.status = ForwardResult::Status::kViolated;
          out.offending_row = r;
          return out;
        }
        done[r] = true;
        progress = true;
      }
    }
  }

  for (std::uint32_t i = 0; i < inst.num_vars(); ++i) {
    if (!known[i]) {
      out.status = ForwardResult::Status::kUnderdetermined;
      out.offending_row = i;
      return out;
    }
  }
  for (std::uint32_t r = 0; r < inst.num_constraints(); ++r) {
    if (done[r]) continue;
    const ConstraintRow& row = inst.rows()[r];
    FieldElement res = inner_known(row.a, -1, nullptr) * inner_known(row.b, -1, nullptr) -
                       inner_known(row.c, -1, nullptr);
    if (!res.is_zero()) {
      out.status = ForwardResult::Status::kViolated;
      out.offending_row = r;
      return out;
    }
  }
  out.status = ForwardResult::Status::kOk;
  return out;
}

namespace {

SparseVec sparse_from_json(const json& j, const FieldModulus* q) {
  if (!j.is_object()) throw Error(Errc::kSchemaError, "sparse map must be an object");
  std::vector<SparseTerm> terms;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    char* end = nullptr;
    unsigned long idx = std::strtoul(key.c_str(), &end, 10);
    if (end == key.c_str() || *end != '\0') {
      throw Error(Errc::kSchemaError, "sparse index is not a decimal integer: " + key);
    }
    if (!it.value().is_string()) {
      throw Error(Errc::kSchemaError, "coefficient must be a decimal string");
    }
    FieldElement c = FieldElement::from_decimal(it.value().get<std::string>(), q);
    if (c.is_zero()) continue;
    terms.push_back({std::uint32_t(idx), c});
  }
  std::sort(terms.begin(), terms.end(),
            [](const SparseTerm& a, const SparseTerm& b) { return a.index < b.index; });
  return terms;
}

void expect_keys(const json& j, const std::set<std::string>& allowed,
                 const std::set<std::string>& required, const char* what) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw Error(Errc::kSchemaError,
                  std::string(what) + ": unknown field '" + it.key() + "'");
    }
  }
  for (const auto& k : required) {
    if (!j.contains(k)) {
      throw Error(Errc::kSchemaError,
                  std::string(what) + ": missing field '" + k + "'");
    }
  }
}

}  // namespace

R1csInstance parse_circuit_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::kSchemaError, std::string("circuit json: ") + e.what());
  }
  if (!j.is_object()) throw Error(Errc::kSchemaError, "circuit json: not an object");
  expect_keys(j,
              {"modulus", "num_vars", "var_classes", "constraints", "weak_sites",
               "public_outputs"},
              {"modulus", "num_vars", "var_classes", "constraints"}, "circuit");

  if (!j["modulus"].is_string()) {
    throw Error(Errc::kSchemaError, "modulus must be a decimal string");
  }
  const FieldModulus* q;
  try {
    q = FieldModulus::from_decimal(j["modulus"].get<std::string>());
  } catch (const Error& e) {
    if (e.code() == Errc::kInvariantError) throw;  // non-prime
    throw Error(Errc::kSchemaError, e.what());
  }

  if (!j["num_vars"].is_number_unsigned()) {
    throw Error(Errc::kSchemaError, "num_vars must be an unsigned integer");
  }
  std::uint32_t n = j["num_vars"].get<std::uint32_t>();

  if (!j["var_classes"].is_array()) {
    throw Error(Errc::kSchemaError, "var_classes must be an array");
  }
  std::vector<VarClass> classes;
  for (const auto& c : j["var_classes"]) {
    if (!c.is_string()) throw Error(Errc::kSchemaError, "var class must be a string");
    classes.push_back(var_class_from_name(c.get<std::string>()));
  }
  if (classes.size() != n) {
    throw Error(Errc::kSchemaError, "var_classes length != num_vars");
  }

  std::vector<ConstraintRow> rows;
  if (!j["constraints"].is_array()) {
    throw Error(Errc::kSchemaError, "constraints must be an array");
  }
  for (const auto& cj : j["constraints"]) {
    if (!cj.is_object()) throw Error(Errc::kSchemaError, "constraint must be an object");
    expect_keys(cj, {"a", "b", "c"}, {"a", "b", "c"}, "constraint");
    ConstraintRow r;
    r.a = sparse_from_json(cj["a"], q);
    r.b = sparse_from_json(cj["b"], q);
    r.c = sparse_from_json(cj["c"], q);
    for (const auto* v : {&r.a, &r.b, &r.c}) {
      for (const auto& t : *v) {
        if (t.index >= n) throw Error(Errc::kSchemaError, "var index out of range");
      }
    }
    rows.push_back(std::move(r));
  }

  std::vector<WeakSite> sites;
  if (j.contains("weak_sites")) {
    if (!j["weak_sites"].is_array()) {
      throw Error(Errc::kSchemaError, "weak_sites must be an array");
    }
    for (const auto& sj : j["weak_sites"]) {
      expect_keys(sj, {"site_id", "rows"}, {"site_id", "rows"}, "weak site");
      WeakSite s;
      if (!sj["site_id"].is_string()) {
        throw Error(Errc::kSchemaError, "site_id must be a string");
      }
      s.site_id = sj["site_id"].get<std::string>();
      for (const auto& r : sj["rows"]) {
        if (!r.is_number_unsigned()) {
          throw Error(Errc::kSchemaError, "site row must be an unsigned integer");
        }
        s.rows.push_back(r.get<std::uint32_t>());
      }
      sites.push_back(std::move(s));
    }
  }

  R1csInstance inst(q, n, std::move(rows), std::move(classes), std::move(sites));

  if (j.contains("public_outputs")) {
    std::vector<std::uint32_t> declared;
    for (const auto& o : j["public_outputs"]) {
      if (!o.is_number_unsigned()) {
        throw Error(Errc::kSchemaError, "public output index must be unsigned");
      }
      declared.push_back(o.get<std::uint32_t>());
    }
    if (declared != inst.public_output_indices()) {
      throw Error(Errc::kSchemaError,
                  "public_outputs must list pub_out wires in ascending order");
    }
  }
  return inst;
}

std::string serialize_circuit_json(const R1csInstance& inst) {
  ordered_json j;
  j["modulus"] = inst.modulus()->value().get_str();
  j["num_vars"] = inst.num_vars();
  ordered_json classes = ordered_json::array();
  for (VarClass c : inst.var_classes()) classes.push_back(var_class_name(c));
  j["var_classes"] = std::move(classes);
  ordered_json cons = ordered_json::array();
  for (const auto& r : inst.rows()) {
    ordered_json cj;
    const std::pair<const SparseVec*, const char*> parts[] = {
        {&r.a, "a"}, {&r.b, "b"}, {&r.c, "c"}};
    for (const auto& part : parts) {
      ordered_json m = ordered_json::object();
      for (const auto& t : *part.first) {
        m[std::to_string(t.index)] = t.coeff.to_decimal();
      }
      cj[part.second] = std::move(m);
    }
    cons.push_back(std::move(cj));
  }
  j["constraints"] = std::move(cons);
  ordered_json sites = ordered_json::array();
  for (const auto& s : inst.weak_sites()) {
    ordered_json sj;
    sj["site_id"] = s.site_id;
    sj["rows"] = s.rows;
    sites.push_back(std::move(sj));
  }
  j["weak_sites"] = std::move(sites);
  j["public_outputs"] = inst.public_output_indices();
  return j.dump(2) + "\n";
}

namespace {

class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return size_ - pos_; }

  const std::uint8_t* take(std::size_t n) {
    if (remaining() < n) throw Error(Errc::kTruncatedSection, "unexpected end of data");
    const std::uint8_t* p = data_ + pos_;
    pos_ += n;
    return p;
  }
  std::uint32_t u32() {
    const std::uint8_t* p = take(4);
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
           (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
  }
  std::uint64_t u64() {
    std::uint64_t lo = u32();
    std::uint64_t hi = u32();
    return lo | (hi << 32);
  }
  void skip(std::size_t n) { take(n); }

 private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(std::uint8_t(v));
  out.push_back(std::uint8_t(v >> 8));
  out.push_back(std::uint8_t(v >> 16));
  out.push_back(std::uint8_t(v >> 24));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  put_u32(out, std::uint32_t(v));
  put_u32(out, std::uint32_t(v >> 32));
}

FieldElement element_from_le(const std::uint8_t* p, std::size_t n8, const FieldModulus* q) {
  std::vector<std::uint8_t> be(p, p + n8);
  std::reverse(be.begin(), be.end());
  return FieldElement::from_bytes_be(be.data(), be.size(), q);
}

void element_to_le(std::vector<std::uint8_t>& out, const FieldElement& v, std::size_t n8) {
  std::vector<std::uint8_t> be((mpz_sizeinbase(v.value().get_mpz_t(), 2) + 7) / 8, 0);
  std::size_t written = 0;
  if (!v.is_zero()) {
    mpz_export(be.data(), &written, 1, 1, 0, 0, v.value().get_mpz_t());
  }
  std::vector<std::uint8_t> le(be.rbegin(), be.rend());
  le.resize(n8, 0);
  out.insert(out.end(), le.begin(), le.end());
}

}  // namespace

R1csInstance parse_r1cs_binary(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes.data(), bytes.size());
  const std::uint8_t* magic = r.take(4);
  if (std::memcmp(magic, "r1cs", 4) != 0) {
    throw Error(Errc::kMagicMismatch, "bad magic, expected 'r1cs'");
  }
  std::uint32_t version = r.u32();
  if (version != 1) {
    throw Error(Errc::kUnsupportedVersion,
                "unsupported r1cs version " + std::to_string(version));
  }
  std::uint32_t n_sections = r.u32();

  const FieldModulus* q = nullptr;
  std::uint32_t n_wires = 0, n_pub_out = 0, n_pub_in = 0, n_prv_in = 0, m = 0;
  std::uint32_t n8 = 0;
  bool have_header = false;
  std::vector<ConstraintRow> rows;
  bool have_constraints = false;
  std::size_t constraints_pos = 0, constraints_size = 0;

  for (std::uint32_t s = 0; s < n_sections; ++s) {
    std::uint32_t stype = r.u32();
    std::uint64_t ssize = r.u64();
    std::size_t start = r.pos();
    if (stype == 1) {
      n8 = r.u32();
      if (n8 == 0 || n8 > 1024) throw Error(Errc::kTruncatedSection, "bad field size");
      const std::uint8_t* prime = r.take(n8);
      std::vector<std::uint8_t> be(prime, prime + n8);
      std::reverse(be.begin(), be.end());
      mpz_class qz;
      if (!be.empty()) mpz_import(qz.get_mpz_t(), be.size(), 1, 1, 0, 0, be.data());
      q = FieldModulus::create(qz);
      n_wires = r.u32();
      n_pub_out = r.u32();
      n_pub_in = r.u32();
      n_prv_in = r.u32();
      r.u64();  // label count
      m = r.u32();
      have_header = true;
      std::size_t used = r.pos() - start;
      if (used > ssize) throw Error(Errc::kTruncatedSection, "header section overrun");
      r.skip(ssize - used);
    } else if (stype == 2) {
      // Constraints may precede the header in a malformed file; remember the
      // span and parse after all sections are walked.
      constraints_pos = start;
      constraints_size = ssize;
      have_constraints = true;
      r.skip(ssize);
    } else {
      r.skip(ssize);
    }
  }

  if (!have_header) throw Error(Errc::kTruncatedSection, "missing header section");
  if (!have_constraints) throw Error(Errc::kTruncatedSection, "missing constraints section");

  ByteReader cr(bytes.data() + constraints_pos, constraints_size);
  for (std::uint32_t ci = 0; ci < m; ++ci) {
    ConstraintRow row;
    for (SparseVec* vec : {&row.a, &row.b, &row.c}) {
      std::uint32_t n_entries = cr.u32();
      std::vector<SparseTerm> terms;
      for (std::uint32_t e = 0; e < n_entries; ++e) {
        std::uint32_t wire = cr.u32();
        const std::uint8_t* val = cr.take(n8);
        FieldElement coeff = element_from_le(val, n8, q);
        if (wire >= n_wires) {
          throw Error(Errc::kInvariantError, "constraint wire out of range");
        }
        if (!coeff.is_zero()) terms.push_back({wire, coeff});
      }
      std::sort(terms.begin(), terms.end(), [](const SparseTerm& a, const SparseTerm& b) {
        return a.index < b.index;
      });
      *vec = std::move(terms);
    }
    rows.push_back(std::move(row));
  }

  std::vector<VarClass> classes(n_wires, VarClass::kIntermediate);
  if (n_wires == 0) throw Error(Errc::kTruncatedSection, "zero wires");
  classes[0] = VarClass::kOne;
  std::uint32_t idx = 1;
  for (std::uint32_t i = 0; i < n_pub_out && idx < n_wires; ++i) {
    classes[idx++] = VarClass::kPublicOutput;
  }
  for (std::uint32_t i = 0; i < n_pub_in && idx < n_wires; ++i) {
    classes[idx++] = VarClass::kPublicInput;
  }
  for (std::uint32_t i = 0; i < n_prv_in && idx < n_wires; ++i) {
    classes[idx++] = VarClass::kPrivateInput;
  }
  return R1csInstance(q, n_wires, std::move(rows), std::move(classes), {});
}

std::vector<std::uint8_t> write_r1cs_binary(const R1csInstance& inst) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), {'r', '1', 'c', 's'});
  put_u32(out, 1);  // version
  put_u32(out, 2);  // sections

  std::size_t n8 = (inst.modulus()->bit_length() + 7) / 8;
  // round up to a multiple of 8 bytes, as the circom toolchain does
  n8 = ((n8 + 7) / 8) * 8;

  std::uint32_t n_pub_out = 0, n_pub_in = 0, n_prv_in = 0;
  for (VarClass c : inst.var_classes()) {
    if (c == VarClass::kPublicOutput) ++n_pub_out;
    if (c == VarClass::kPublicInput) ++n_pub_in;
    if (c == VarClass::kPrivateInput) ++n_prv_in;
  }

  // header section
  put_u32(out, 1);
  std::uint64_t header_size = 4 + n8 + 4 * 5 + 8;
  put_u64(out, header_size);
  put_u32(out, std::uint32_t(n8));
  {
    std::vector<std::uint8_t> be((inst.modulus()->bit_length() + 7) / 8, 0);
    std::size_t written = 0;
    mpz_export(be.data(), &written, 1, 1, 0, 0, inst.modulus()->value().get_mpz_t());
    std::vector<std::uint8_t> le(be.rbegin(), be.rend());
    le.resize(n8, 0);
    out.insert(out.end(), le.begin(), le.end());
  }
  put_u32(out, inst.num_vars());
  put_u32(out, n_pub_out);
  put_u32(out, n_pub_in);
  put_u32(out, n_prv_in);
  put_u64(out, inst.num_vars());  // label count
  put_u32(out, inst.num_constraints());

  // constraints section
  std::vector<std::uint8_t> body;
  for (const auto& row : inst.rows()) {
    for (const SparseVec* vec : {&row.a, &row.b, &row.c}) {
      put_u32(body, std::uint32_t(vec->size()));
      for (const auto& t : *vec) {
        put_u32(body, t.index);
        element_to_le(body, t.coeff, n8);
      }
    }
  }
  put_u32(out, 2);
  put_u64(out, body.size());
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

R1csInstance apply_sites_json(const R1csInstance& inst, const std::string& sites_json) {
  json j;
  try {
    j = json::parse(sites_json);
  } catch (const json::exception& e) {
    throw Error(Errc::kSchemaError, std::string("sites json: ") + e.what());
  }
  expect_keys(j, {"weak_sites"}, {"weak_sites"}, "sites file");
  std::vector<WeakSite> sites;
  for (const auto& sj : j["weak_sites"]) {
    expect_keys(sj, {"site_id", "rows"}, {"site_id", "rows"}, "weak site");
    WeakSite s;
    s.site_id = sj["site_id"].get<std::string>();
    for (const auto& r : sj["rows"]) s.rows.push_back(r.get<std::uint32_t>());
    sites.push_back(std::move(s));
  }
  return R1csInstance(inst.modulus(), inst.num_vars(), inst.rows(),
                      inst.var_classes(), std::move(sites));
}

Witness parse_witness_json(const std::string& text, const FieldModulus* q) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::kSchemaError, std::string("witness json: ") + e.what());
  }
  expect_keys(j, {"values"}, {"values"}, "witness");
  Witness w;
  for (const auto& v : j["values"]) {
    if (!v.is_string()) throw Error(Errc::kSchemaError, "witness value must be a string");
    w.values.push_back(FieldElement::from_decimal(v.get<std::string>(), q));
  }
  if (w.values.empty() || !w.values[0].is_one()) {
    throw Error(Errc::kSchemaError, "witness[0] must be 1");
  }
  return w;
}

std::string serialize_witness_json(const Witness& w) {
  ordered_json j;
  ordered_json vals = ordered_json::array();
  for (const auto& v : w.values) vals.push_back(v.to_decimal());
  j["values"] = std::move(vals);
  return j.dump(2) + "\n";
}

}  // namespace zkcraft
