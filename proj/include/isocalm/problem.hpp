#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "isocalm/operators.hpp"
#include "isocalm/regularizer.hpp"

namespace isocalm {

using Json = nlohmann::json;

/// P(b, mu): min (1/(2 mu)) ||phi x - b||^2 + g(k x).
struct ProblemInstance {
  LinearOp phi;
  Vector b;
  double mu = 1.0;
  LinearOp k;
  Regularizer reg;
  Tolerances tol;

  Index dim_x() const { return phi.cols(); }
  Index dim_y() const { return k.rows(); }
  Matrix phi_matrix() const { return phi.materialize(); }
  Matrix k_matrix() const { return k.materialize(); }

  void validate() const {
    tol.validate();
    if (!(mu > 0.0) || !std::isfinite(mu)) throw ValidationError("mu", "mu must be positive");
    require_finite(b, "b");
    if (b.size() != phi.rows())
      throw ValidationError("b", "length " + std::to_string(b.size()) + " differs from rows(phi) = " +
                                     std::to_string(phi.rows()));
    if (k.cols() != phi.cols())
      throw ValidationError("k", "cols(k) = " + std::to_string(k.cols()) + " differs from cols(phi) = " +
                                     std::to_string(phi.cols()));
    if (reg.dim() != k.rows())
      throw ValidationError("reg", "dimension mismatch: regularizer acts on R^" + std::to_string(reg.dim()) +
                                       " but rows(k) = " + std::to_string(k.rows()));
  }
};

struct KktResiduals {
  double stationarity = 0.0;
  double dual_feas = 0.0;
  double gap_proxy = 0.0;
};

struct SolutionPair {
  Vector x_bar;
  Vector y_bar;
  Vector v_bar;
  KktResiduals residuals;
  long iterations = 0;
};

/// v = -(1/mu) phi^T (phi x - b).
inline Vector compute_v_bar(const ProblemInstance& inst, const Vector& x) {
  const Matrix phi = inst.phi_matrix();
  return -(phi.transpose() * (phi * x - inst.b)) / inst.mu;
}

// ------------------------------------------------------------------ JSON

namespace json_detail {

inline const Json& field(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(path.empty() ? key : path + "." + key, "missing field");
  return *it;
}

inline std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

inline double number(const Json& j, const std::string& path) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == s.size() && used > 0) return v;
  }
  throw ValidationError(path, "expected a number");
}

inline Index count(const Json& j, const std::string& path) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) throw ValidationError(path, "expected an integer");
  const auto v = j.get<long long>();
  if (v < 0) throw ValidationError(path, "must be nonnegative");
  return static_cast<Index>(v);
}

inline Vector vector(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ValidationError(path, "expected an array");
  Vector v(static_cast<Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

inline Matrix matrix(const Json& j, const std::string& path) {
  const Index r = count(field(j, "rows", path), join(path, "rows"));
  const Index c = count(field(j, "cols", path), join(path, "cols"));
  const Vector e = vector(field(j, "entries", path), join(path, "entries"));
  if (e.size() != r * c)
    throw ValidationError(join(path, "entries"), "expected rows*cols = " + std::to_string(r * c) + " entries");
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index k = 0; k < c; ++k) m(i, k) = e(i * c + k);
  return m;
}

inline Json matrix_json(const Matrix& m) {
  Json e = Json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index k = 0; k < m.cols(); ++k) e.push_back(m(i, k));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"entries", e}};
}

inline Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline std::string kind(const Json& j, const std::string& path) {
  const Json& k = field(j, "kind", path);
  if (!k.is_string()) throw ValidationError(join(path, "kind"), "expected a string");
  return k.get<std::string>();
}

template <class F>
auto rethrow_at(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ValidationError& e) {
    if (e.path().rfind(path, 0) == 0) throw;
    throw ValidationError(e.path().empty() ? path : join(path, e.path()),
                          std::string(e.what()).substr(e.path().empty() ? 0 : e.path().size() + 2));
  }
}

}  // namespace json_detail

inline LinearOp operator_from_json(const Json& j, const std::string& path) {
  using namespace json_detail;
  const std::string kd = kind(j, path);
  return rethrow_at(path, [&] {
    if (kd == "dense") return LinearOp::dense(matrix(j, path));
    if (kd == "identity") return LinearOp::identity(count(field(j, "dim", path), join(path, "dim")));
    if (kd == "grad1d") return LinearOp::grad1d(count(field(j, "n", path), join(path, "n")));
    if (kd == "grad2d")
      return LinearOp::grad2d(count(field(j, "n1", path), join(path, "n1")), count(field(j, "n2", path), join(path, "n2")));
    throw ValidationError(join(path, "kind"), "unknown operator kind '" + kd + "'");
  });
}

inline Json operator_to_json(const LinearOp& op) {
  return std::visit(
      [](const auto& k) -> Json {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, op::Dense>) {
          Json j = json_detail::matrix_json(k.a);
          j["kind"] = "dense";
          return j;
        } else if constexpr (std::is_same_v<T, op::Identity>) {
          return {{"kind", "identity"}, {"dim", k.dim}};
        } else if constexpr (std::is_same_v<T, op::Grad1d>) {
          return {{"kind", "grad1d"}, {"n", k.n}};
        } else {
          return {{"kind", "grad2d"}, {"n1", k.n1}, {"n2", k.n2}};
        }
      },
      op.kind());
}

inline Regularizer regularizer_from_json(const Json& j) {
  using namespace json_detail;
  const std::string path = "reg";
  const std::string kd = kind(j, path);
  if (kd == "group_lasso") {
    reg::GroupLasso g;
    g.dim = count(field(j, "dim", path), "reg.dim");
    g.weight = number(field(j, "weight", path), "reg.weight");
    const Json& gs = field(j, "groups", path);
    if (!gs.is_array()) throw ValidationError("reg.groups", "expected an array of index arrays");
    for (size_t i = 0; i < gs.size(); ++i) {
      const std::string gp = "reg.groups[" + std::to_string(i) + "]";
      if (!gs[i].is_array()) throw ValidationError(gp, "expected an array of indices");
      std::vector<Index> grp;
      for (size_t k = 0; k < gs[i].size(); ++k) grp.push_back(count(gs[i][k], gp + "[" + std::to_string(k) + "]"));
      g.groups.push_back(std::move(grp));
    }
    return Regularizer(g);
  }
  if (kd == "nuclear") {
    reg::Nuclear nu;
    nu.m = count(field(j, "m", path), "reg.m");
    nu.n = count(field(j, "n", path), "reg.n");
    nu.weight = number(field(j, "weight", path), "reg.weight");
    return Regularizer(nu);
  }
  if (kd == "polyhedral_indicator") {
    reg::PolyhedralIndicator p;
    p.a = matrix(field(j, "A", path), "reg.A");
    p.c = vector(field(j, "c", path), "reg.c");
    return Regularizer(p);
  }
  throw ValidationError("reg.kind", "unknown regularizer kind '" + kd + "'");
}

inline Json regularizer_to_json(const Regularizer& r) {
  if (const auto* g = std::get_if<reg::GroupLasso>(&r.spec())) {
    Json groups = Json::array();
    for (const auto& grp : g->groups) groups.push_back(grp);
    return {{"kind", "group_lasso"}, {"dim", g->dim}, {"groups", groups}, {"weight", g->weight}};
  }
  if (const auto* nu = std::get_if<reg::Nuclear>(&r.spec()))
    return {{"kind", "nuclear"}, {"m", nu->m}, {"n", nu->n}, {"weight", nu->weight}};
  const auto& p = std::get<reg::PolyhedralIndicator>(r.spec());
  return {{"kind", "polyhedral_indicator"}, {"A", json_detail::matrix_json(p.a)}, {"c", json_detail::vector_json(p.c)}};
}

inline Tolerances tolerances_from_json(const Json& j) {
  using namespace json_detail;
  Tolerances t;
  if (!j.is_object()) throw ValidationError("tol", "expected an object");
  if (j.contains("rank")) t.rank = number(j["rank"], "tol.rank");
  if (j.contains("orth")) t.orth = number(j["orth"], "tol.orth");
  if (j.contains("member")) t.member = number(j["member"], "tol.member");
  if (j.contains("kkt")) t.kkt = number(j["kkt"], "tol.kkt");
  t.validate();
  return t;
}

inline Json tolerances_to_json(const Tolerances& t) {
  return {{"rank", t.rank}, {"orth", t.orth}, {"member", t.member}, {"kkt", t.kkt}};
}

inline ProblemInstance instance_from_json(const Json& j) {
  using namespace json_detail;
  if (!j.is_object()) throw ValidationError("", "instance document must be a JSON object");
  ProblemInstance inst;
  inst.phi = operator_from_json(field(j, "phi", ""), "phi");
  inst.b = vector(field(j, "b", ""), "b");
  inst.mu = number(field(j, "mu", ""), "mu");
  if (!(inst.mu > 0.0)) throw ValidationError("mu", "mu must be positive");
  inst.k = operator_from_json(field(j, "k", ""), "k");
  inst.reg = regularizer_from_json(field(j, "reg", ""));
  if (j.contains("tol")) inst.tol = tolerances_from_json(j["tol"]);
  inst.validate();
  return inst;
}

inline ProblemInstance load_instance(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError("", std::string("malformed JSON: ") + e.what());
  }
  return instance_from_json(j);
}

inline ProblemInstance load_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read instance file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_instance(ss.str());
}

inline Json instance_to_json(const ProblemInstance& inst) {
  return {{"phi", operator_to_json(inst.phi)},
          {"b", json_detail::vector_json(inst.b)},
          {"mu", inst.mu},
          {"k", operator_to_json(inst.k)},
          {"reg", regularizer_to_json(inst.reg)},
          {"tol", tolerances_to_json(inst.tol)}};
}

inline std::string save_instance(const ProblemInstance& inst) { return instance_to_json(inst).dump(2); }

/// FNV-1a over the canonical serialization, as 16 hex digits.
inline std::string instance_hash(const ProblemInstance& inst) {
  const std::string s = instance_to_json(inst).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline Json solution_to_json(const SolutionPair& p) {
  return {{"x_bar", json_detail::vector_json(p.x_bar)},
          {"y_bar", json_detail::vector_json(p.y_bar)},
          {"v_bar", json_detail::vector_json(p.v_bar)},
          {"residuals",
           {{"stationarity", p.residuals.stationarity},
            {"dual_feas", p.residuals.dual_feas},
            {"gap_proxy", p.residuals.gap_proxy}}},
          {"iterations", p.iterations}};
}

}  // namespace isocalm
