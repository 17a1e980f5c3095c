#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "isocalm/demo_cases.hpp"
#include "isocalm/report_io.hpp"

#ifndef ISOCALM_DATA_DIR
#define ISOCALM_DATA_DIR "data/instances"
#endif

namespace isocalm {

namespace cli_detail {

constexpr int exit_ok = 0;
constexpr int exit_error = 1;
constexpr int exit_unknown = 2;

struct Options {
  std::string instance;
  std::string out;
  std::uint64_t seed = 0;
  std::optional<double> tol_rank, tol_member, tol_kkt;
  std::vector<double> radii{1e-2, 1e-3, 1e-4};
  int samples = 0;
  std::vector<double> t_grid{1e-1, 1e-2, 1e-3};
  std::string y_override;
  std::string format = "json";
};

/// Accepts a path, or a bare file name from the bundled instance directory.
inline std::string resolve_instance(const std::string& p) {
  namespace fs = std::filesystem;
  if (fs::exists(p)) return p;
  const fs::path bundled = fs::path(ISOCALM_DATA_DIR) / p;
  if (fs::exists(bundled)) return bundled.string();
  if (fs::exists(bundled.string() + ".json")) return bundled.string() + ".json";
  return p;
}

inline ProblemInstance load(const Options& o) {
  ProblemInstance inst = load_instance_file(resolve_instance(o.instance));
  if (o.tol_rank) inst.tol.rank = *o.tol_rank;
  if (o.tol_member) inst.tol.member = *o.tol_member;
  if (o.tol_kkt) inst.tol.kkt = *o.tol_kkt;
  inst.validate();
  return inst;
}

inline Vector read_y_override(const std::string& path, Index dim) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read multiplier file '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ValidationError("y_override", std::string("malformed JSON: ") + e.what());
  }
  const Json& arr = j.is_object() ? json_detail::field(j, "y", "y_override") : j;
  const Vector y = json_detail::vector(arr, "y_override.y");
  if (y.size() != dim)
    throw ValidationError("y_override.y", "length " + std::to_string(y.size()) + " differs from dim Y = " +
                                              std::to_string(dim));
  return y;
}

inline SolutionPair solved_pair(const ProblemInstance& inst, const Options& o) {
  SolutionPair p = solve(inst);
  if (!o.y_override.empty()) p = make_pair(inst, p.x_bar, read_y_override(o.y_override, inst.dim_y()));
  return p;
}

inline void emit(const std::string& text, const Options& o, std::ostream& out) {
  if (o.out.empty()) {
    out << text;
    return;
  }
  std::ofstream f(o.out);
  if (!f) throw Error("cannot write '" + o.out + "'");
  f << text;
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

inline bool any_unknown(const CertificateReport& r) {
  bool u = r.cond_suf.is_unknown() || r.cond_nes.is_unknown() ||
           r.conclusion_solution_map.kind == Conclusion::inconclusive;
  if (r.srcq) u = u || r.srcq->is_unknown();
  if (r.conclusion_primal_dual) u = u || r.conclusion_primal_dual->kind == Conclusion::inconclusive;
  return u;
}

inline int certificate_exit(const CertificateReport& r) { return any_unknown(r) ? exit_unknown : exit_ok; }

inline int cmd_solve(const Options& o, std::ostream& out) {
  const ProblemInstance inst = load(o);
  const SolutionPair p = solve(inst);
  Json j = solution_to_json(p);
  j["provenance"] = provenance_json(inst, o.seed);
  emit(dump(j), o, out);
  return exit_ok;
}

inline int cmd_certify(const Options& o, bool primal_dual, std::ostream& out) {
  const ProblemInstance inst = load(o);
  const SolutionPair p = solved_pair(inst, o);
  const CertificateReport r = primal_dual ? certify_primal_dual(inst, p, o.seed) : certify_solution_map(inst, p, o.seed);
  Json j = certificate_to_json(r);
  j["provenance"] = provenance_json(inst, o.seed);
  emit(dump(j), o, out);
  return certificate_exit(r);
}

inline int cmd_sweep(const Options& o, std::ostream& out) {
  const ProblemInstance inst = load(o);
  const SolutionPair p = solved_pair(inst, o);
  SweepConfig cfg;
  cfg.radii = o.radii;
  cfg.n_per_radius = o.samples > 0 ? o.samples : 20;
  cfg.seed = o.seed;
  const KappaEstimate k = perturbation_sweep(inst, p, cfg);
  if (o.format == "csv") {
    emit(sweep_csv(k), o, out);
  } else {
    Json j = kappa_to_json(k);
    j["provenance"] = provenance_json(inst, o.seed);
    emit(dump(j), o, out);
    if (!o.out.empty()) {
      std::ofstream f(o.out + ".csv");
      if (!f) throw Error("cannot write '" + o.out + ".csv'");
      f << sweep_csv(k);
    }
  }
  for (const auto& s : k.samples)
    if (s.flag == "solver_failed") return exit_unknown;
  return exit_ok;
}

inline int cmd_probe(const Options& o, std::ostream& out) {
  const ProblemInstance inst = load(o);
  const SolutionPair p = solved_pair(inst, o);
  const CertificateReport r = certify_solution_map(inst, p, o.seed);
  Json j;
  j["provenance"] = provenance_json(inst, o.seed);
  j["conclusion_solution_map"] = conclusion_to_json(r.conclusion_solution_map);
  const Vector& w = r.cond_nes.is_nontrivial() ? r.cond_nes.witness : r.cond_suf.witness;
  int code = exit_ok;
  if (w.size() == 0) {
    j["probe"] = {{"status", "not_run"}, {"reason", "no witness direction: the certificate found none"}};
    if (r.conclusion_solution_map.kind == Conclusion::inconclusive) code = exit_unknown;
  } else {
    SolutionPair q = p;
    q.y_bar = r.y_used;
    const ProbeReport pr = instability_probe(inst, q, w, o.t_grid);
    j["witness"] = json_detail::vector_json(w);
    j["probe"] = probe_to_json(pr);
    if (pr.status == ProbeReport::unknown) code = exit_unknown;
  }
  emit(dump(j), o, out);
  return code;
}

inline int cmd_lab(const Options& o, std::ostream& out) {
  const ProblemInstance inst = load(o);
  const SolutionPair p = solved_pair(inst, o);
  const Vector kx = inst.k_matrix() * p.x_bar;
  const int n_dirs = o.samples > 0 ? o.samples : 50;
  Json j;
  j["provenance"] = provenance_json(inst, o.seed);
  int code = exit_ok;
  try {
    j["kernel_formula"] = kernel_formula_to_json(kernel_formula_check(inst.reg, kx, p.y_bar, n_dirs, o.seed, inst.tol));
  } catch (const Error& e) {
    j["kernel_formula"] = {{"status", "unknown"}, {"reason", e.what()}};
    code = exit_unknown;
  }
  try {
    j["zero_product"] =
        zero_product_to_json(zero_product_check(inst.reg, kx, p.y_bar, 20L * n_dirs, o.seed, inst.tol));
  } catch (const Error& e) {
    j["zero_product"] = {{"status", "unknown"}, {"reason", e.what()}};
    code = exit_unknown;
  }
  emit(dump(j), o, out);
  return code;
}

inline int cmd_demo(const Options& o, std::ostream& out) {
  std::ostringstream table;
  Json rows = Json::array();
  bool all_pass = true;
  table << std::left << std::setw(24) << "case" << std::setw(18) << "expected" << std::setw(18) << "obtained"
        << std::setw(18) << "pd expected" << std::setw(18) << "pd obtained" << std::setw(6) << "exit"
        << "result\n";
  for (const DemoCase& c : demo_cases()) {
    std::string got = "error", got_pd = "-", pd_exp = c.expected_primal_dual ? to_string(*c.expected_primal_dual) : "-";
    int code = exit_error;
    bool pass = false;
    try {
      const SolutionPair p = solve(c.instance);
      const CertificateReport r = certify_primal_dual(c.instance, p, o.seed);
      got = to_string(r.conclusion_solution_map.kind);
      got_pd = to_string(r.conclusion_primal_dual->kind);
      code = certificate_exit(r);
      const int want_code = c.expected == Conclusion::inconclusive ? exit_unknown : exit_ok;
      pass = r.conclusion_solution_map.kind == c.expected && code == want_code &&
             (!c.expected_primal_dual || r.conclusion_primal_dual->kind == *c.expected_primal_dual);
    } catch (const std::exception& e) {
      got = std::string("error: ") + e.what();
    }
    all_pass = all_pass && pass;
    table << std::setw(24) << c.name << std::setw(18) << to_string(c.expected) << std::setw(18) << got << std::setw(18)
          << pd_exp << std::setw(18) << got_pd << std::setw(6) << code << (pass ? "PASS" : "FAIL") << "\n";
    rows.push_back({{"case", c.name},
                    {"description", c.description},
                    {"expected", to_string(c.expected)},
                    {"obtained", got},
                    {"expected_primal_dual", pd_exp},
                    {"obtained_primal_dual", got_pd},
                    {"exit_code", code},
                    {"pass", pass}});
  }
  out << table.str();
  if (!o.out.empty()) emit(dump({{"cases", rows}, {"all_pass", all_pass}, {"seed", o.seed}}), o, out);
  return all_pass ? exit_ok : exit_error;
}

}  // namespace cli_detail

/// Runs the command line; args excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using namespace cli_detail;
  CLI::App app{"Isolated calmness certificates for regularized least squares", "isocalm"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool needs_instance) {
    if (needs_instance) sub->add_option("instance", o.instance, "instance JSON file")->required();
    sub->add_option("--out", o.out, "write the report to PATH");
    sub->add_option("--seed", o.seed, "random seed");
    sub->add_option("--tol-rank", o.tol_rank, "relative rank cutoff");
    sub->add_option("--tol-member", o.tol_member, "membership tolerance");
    sub->add_option("--tol-kkt", o.tol_kkt, "KKT residual tolerance");
  };
  auto* solve_cmd = app.add_subcommand("solve", "solve P(b, mu) and print the primal-dual pair");
  common(solve_cmd, true);
  auto* certify_cmd = app.add_subcommand("certify", "certify isolated calmness of the solution map");
  common(certify_cmd, true);
  auto* certify_pd_cmd = app.add_subcommand("certify-pd", "certify the primal-dual solution map");
  common(certify_pd_cmd, true);
  auto* sweep_cmd = app.add_subcommand("sweep", "estimate the calmness modulus by perturbation");
  common(sweep_cmd, true);
  sweep_cmd->add_option("--radii", o.radii, "perturbation radii")->delimiter(',');
  sweep_cmd->add_option("--samples", o.samples, "samples per radius");
  sweep_cmd->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  auto* probe_cmd = app.add_subcommand("probe", "build alternate solutions along the witness direction");
  common(probe_cmd, true);
  probe_cmd->add_option("--t-grid", o.t_grid, "step sizes")->delimiter(',');
  auto* lab_cmd = app.add_subcommand("lab", "kernel-formula and zero-product checks at the solution");
  common(lab_cmd, true);
  lab_cmd->add_option("--samples", o.samples, "number of directions");
  auto* demo_cmd = app.add_subcommand("demo", "run the curated example set");
  common(demo_cmd, false);
  for (auto* sub : {certify_cmd, certify_pd_cmd, sweep_cmd, probe_cmd, lab_cmd})
    sub->add_option("--y-override", o.y_override, "JSON file with the multiplier to use");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? exit_ok : exit_error;
  }

  try {
    if (*solve_cmd) return cmd_solve(o, out);
    if (*certify_cmd) return cmd_certify(o, false, out);
    if (*certify_pd_cmd) return cmd_certify(o, true, out);
    if (*sweep_cmd) return cmd_sweep(o, out);
    if (*probe_cmd) return cmd_probe(o, out);
    if (*lab_cmd) return cmd_lab(o, out);
    if (*demo_cmd) return cmd_demo(o, out);
  } catch (const SolverError& e) {
    err << "error: solver: " << e.what() << "\n";
    return exit_error;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_error;
  }
  return exit_error;
}

}  // namespace isocalm
