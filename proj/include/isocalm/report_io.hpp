#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "isocalm/empirics.hpp"

namespace isocalm {

namespace report_detail {

/// Finite numbers as-is, infinities as "inf"/"-inf", NaN as null.
inline Json num(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline Json vec_or_null(const Vector& v) {
  if (v.size() == 0) return nullptr;
  return json_detail::vector_json(v);
}

}  // namespace report_detail

inline Json provenance_json(const ProblemInstance& inst, std::uint64_t seed) {
  return {{"instance_hash", instance_hash(inst)}, {"tolerances", tolerances_to_json(inst.tol)}, {"seed", seed}};
}

inline Json verdict_to_json(const TrivialityVerdict& v) {
  Json j = {{"verdict", to_string(v.outcome)}, {"exact", v.exact}, {"witness", report_detail::vec_or_null(v.witness)}};
  if (!v.reason.empty()) j["reason"] = v.reason;
  return j;
}

inline Json conclusion_to_json(const Conclusion& c) {
  Json j = {{"kind", to_string(c.kind)}, {"witness", report_detail::vec_or_null(c.witness)}};
  if (!c.witness_space.empty()) j["witness_space"] = c.witness_space;
  if (!c.reason.empty()) j["reason"] = c.reason;
  return j;
}

inline Json certificate_to_json(const CertificateReport& r) {
  using json_detail::vector_json;
  Json j = {{"x_bar", vector_json(r.x_bar)},
            {"v_bar", vector_json(r.v_bar)},
            {"y_used", vector_json(r.y_used)},
            {"y_refined", r.y_refined},
            {"eq_Suf", to_string(r.cond_suf.outcome)},
            {"eq_Nes", to_string(r.cond_nes.outcome)},
            {"cond_suf", verdict_to_json(r.cond_suf)},
            {"cond_nes", verdict_to_json(r.cond_nes)},
            {"qual_polyhedral", r.qual_polyhedral},
            {"qual_ri", to_string(r.qual_ri)},
            {"qgc",
             {{"primal_qgc", r.qgc.primal_qgc},
              {"dual_qgc", r.qgc.dual_qgc},
              {"polyhedral_conjugate_face", r.qgc.polyhedral_conjugate_face}}},
            {"conclusion_solution_map", conclusion_to_json(r.conclusion_solution_map)},
            {"notes", r.notes}};
  if (r.srcq) j["srcq"] = verdict_to_json(*r.srcq);
  if (r.pd_conditions)
    j["pd_conditions"] = {{"i", to_string(r.pd_conditions->i)},
                          {"ii", to_string(r.pd_conditions->ii)},
                          {"iii", to_string(r.pd_conditions->iii)}};
  if (r.conclusion_primal_dual) j["conclusion_primal_dual"] = conclusion_to_json(*r.conclusion_primal_dual);
  return j;
}

inline Json kappa_to_json(const KappaEstimate& k) {
  using report_detail::num;
  Json samples = Json::array();
  for (const auto& s : k.samples)
    samples.push_back({{"radius", s.radius},
                       {"db_norm", s.db_norm},
                       {"dmu", s.dmu},
                       {"x_dist", s.x_dist},
                       {"ratio", num(s.ratio)},
                       {"solver_iters", s.solver_iters},
                       {"flag", s.flag}});
  Json kappa = Json::array();
  for (double v : k.kappa_hat_per_radius) kappa.push_back(num(v));
  return {{"radii", k.radii}, {"kappa_hat_per_radius", kappa}, {"blowup_flag", k.blowup_flag}, {"samples", samples}};
}

inline Json probe_to_json(const ProbeReport& p) {
  using report_detail::num;
  Json steps = Json::array();
  for (const auto& s : p.steps)
    steps.push_back({{"t", s.t},
                     {"x_t", json_detail::vector_json(s.x_t)},
                     {"x_dist", s.x_dist},
                     {"b_dist", s.b_dist},
                     {"ratio", num(s.ratio)},
                     {"stationarity", s.stationarity},
                     {"graph", s.graph},
                     {"kkt_ok", s.kkt_ok}});
  Json j = {{"status", to_string(p.status)}, {"min_ratio", num(p.min_ratio)}, {"one_sided", p.one_sided}, {"steps", steps}};
  if (!p.reason.empty()) j["reason"] = p.reason;
  return j;
}

inline Json kernel_formula_to_json(const KernelFormulaReport& r) {
  Json dis = Json::array();
  for (const auto& w : r.disagreements) dis.push_back(json_detail::vector_json(w));
  return {{"n_dirs", r.n_dirs},
          {"both_member", r.both_member},
          {"both_nonmember", r.both_nonmember},
          {"estimator_only", r.estimator_only},
          {"cone_only", r.cone_only},
          {"disagreements", dis}};
}

inline Json zero_product_to_json(const ZeroProductReport& r) {
  return {{"samples", r.samples},
          {"zero_branch", r.zero_branch},
          {"member_branch", r.member_branch},
          {"positivity_violations", r.positivity_violations},
          {"zero_violations", r.zero_violations},
          {"min_positivity_margin", report_detail::num(r.min_positivity_margin)}};
}

// ------------------------------------------------------------- readers

namespace report_detail {

inline double num_from(const Json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw ValidationError("report", "unexpected number string '" + s + "'");
  }
  return j.get<double>();
}

inline Vector vec_from(const Json& j) { return j.is_null() ? Vector() : json_detail::vector(j, "report"); }

inline Tri tri_from(const std::string& s) {
  if (s == "holds") return Tri::yes;
  if (s == "fails") return Tri::no;
  return Tri::unknown;
}

inline TrivialityVerdict verdict_from(const Json& j) {
  TrivialityVerdict v;
  const Tri t = tri_from(j.at("verdict").get<std::string>());
  v.outcome = t == Tri::yes ? TrivialityVerdict::trivial
              : t == Tri::no ? TrivialityVerdict::nontrivial
                             : TrivialityVerdict::unknown;
  v.exact = j.at("exact").get<bool>();
  v.witness = vec_from(j.at("witness"));
  if (j.contains("reason")) v.reason = j["reason"].get<std::string>();
  return v;
}

inline Conclusion conclusion_from(const Json& j) {
  Conclusion c;
  const std::string k = j.at("kind").get<std::string>();
  c.kind = k == "IsolatedCalm"      ? Conclusion::isolated_calm
           : k == "NotIsolatedCalm" ? Conclusion::not_isolated_calm
                                    : Conclusion::inconclusive;
  c.witness = vec_from(j.at("witness"));
  if (j.contains("witness_space")) c.witness_space = j["witness_space"].get<std::string>();
  if (j.contains("reason")) c.reason = j["reason"].get<std::string>();
  return c;
}

}  // namespace report_detail

inline CertificateReport certificate_from_json(const Json& j) {
  using namespace report_detail;
  CertificateReport r;
  r.x_bar = vec_from(j.at("x_bar"));
  r.v_bar = vec_from(j.at("v_bar"));
  r.y_used = vec_from(j.at("y_used"));
  r.y_refined = j.at("y_refined").get<bool>();
  r.cond_suf = verdict_from(j.at("cond_suf"));
  r.cond_nes = verdict_from(j.at("cond_nes"));
  r.qual_polyhedral = j.at("qual_polyhedral").get<bool>();
  r.qual_ri = tri_from(j.at("qual_ri").get<std::string>());
  const Json& q = j.at("qgc");
  r.qgc = {q.at("primal_qgc").get<bool>(), q.at("dual_qgc").get<bool>(), q.at("polyhedral_conjugate_face").get<bool>()};
  r.conclusion_solution_map = conclusion_from(j.at("conclusion_solution_map"));
  r.notes = j.at("notes").get<std::vector<std::string>>();
  if (j.contains("srcq")) r.srcq = verdict_from(j["srcq"]);
  if (j.contains("pd_conditions")) {
    const Json& pd = j["pd_conditions"];
    r.pd_conditions = PdConditions{tri_from(pd.at("i").get<std::string>()), tri_from(pd.at("ii").get<std::string>()),
                                   tri_from(pd.at("iii").get<std::string>())};
  }
  if (j.contains("conclusion_primal_dual")) r.conclusion_primal_dual = conclusion_from(j["conclusion_primal_dual"]);
  return r;
}

inline KappaEstimate kappa_from_json(const Json& j) {
  using namespace report_detail;
  KappaEstimate k;
  k.radii = j.at("radii").get<std::vector<double>>();
  for (const auto& v : j.at("kappa_hat_per_radius")) k.kappa_hat_per_radius.push_back(num_from(v));
  k.blowup_flag = j.at("blowup_flag").get<bool>();
  for (const auto& s : j.at("samples"))
    k.samples.push_back({s.at("radius").get<double>(), s.at("db_norm").get<double>(), s.at("dmu").get<double>(),
                         s.at("x_dist").get<double>(), num_from(s.at("ratio")), s.at("solver_iters").get<long>(),
                         s.at("flag").get<std::string>()});
  return k;
}

inline std::string save_report(const CertificateReport& r) { return certificate_to_json(r).dump(2); }

/// JSON or, for "csv", one row per perturbation sample.
inline std::string save_report(const KappaEstimate& k, const std::string& format = "json") {
  if (format == "csv") return sweep_csv(k);
  if (format != "json") throw ValidationError("format", "expected json or csv");
  return kappa_to_json(k).dump(2);
}

}  // namespace isocalm
