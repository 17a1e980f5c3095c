#include <filesystem>

#include <gtest/gtest.h>

#include "isocalm/demo_cases.hpp"
#include "isocalm/report_io.hpp"

using namespace isocalm;

namespace {

const char* kMinimal = R"({
  "phi": {"kind": "dense", "rows": 1, "cols": 1, "entries": [1]},
  "b": [3], "mu": 1,
  "k": {"kind": "identity", "dim": 1},
  "reg": {"kind": "group_lasso", "dim": 1, "groups": [[0]], "weight": 1}
})";

std::string with(const std::string& key, const std::string& value) {
  Json j = Json::parse(kMinimal);
  j[key] = Json::parse(value);
  return j.dump();
}

std::string error_of(const std::string& text) {
  try {
    load_instance(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(LoadInstance, MinimalLasso) {
  const ProblemInstance p = load_instance(kMinimal);
  EXPECT_EQ(p.dim_x(), 1);
  EXPECT_EQ(p.dim_y(), 1);
  EXPECT_TRUE(p.k.is_identity());
  EXPECT_TRUE(p.reg.is_group_lasso());
  EXPECT_EQ(p.tol.kkt, 1e-10);
}

TEST(LoadInstance, RejectsNonPositiveMu) {
  EXPECT_NE(error_of(with("mu", "0")).find("mu must be positive"), std::string::npos);
  EXPECT_NE(error_of(with("mu", "-1")).find("mu must be positive"), std::string::npos);
}

TEST(LoadInstance, DimensionMismatchNamesReg) {
  Json j = Json::parse(kMinimal);
  j["phi"] = {{"kind", "dense"}, {"rows", 1}, {"cols", 2}, {"entries", {1, 1}}};
  j["k"] = {{"kind", "identity"}, {"dim", 2}};
  j["reg"] = {{"kind", "group_lasso"}, {"dim", 3}, {"groups", {{0}, {1}, {2}}}, {"weight", 1}};
  const std::string e = error_of(j.dump());
  EXPECT_EQ(e.rfind("reg", 0), 0u) << e;
  EXPECT_NE(e.find("dimension mismatch"), std::string::npos);
}

TEST(LoadInstance, ErrorsCarryFieldPaths) {
  EXPECT_EQ(error_of(with("b", R"(["x"])")).rfind("b[0]", 0), 0u);
  EXPECT_EQ(error_of(with("k", R"({"kind": "rotation"})")).rfind("k.kind", 0), 0u);
  Json j = Json::parse(kMinimal);
  j["reg"]["groups"] = {{0}, {0}};
  EXPECT_EQ(error_of(j.dump()).rfind("reg.groups[1]", 0), 0u);
  j = Json::parse(kMinimal);
  j.erase("phi");
  EXPECT_EQ(error_of(j.dump()).rfind("phi", 0), 0u);
  EXPECT_NE(error_of("{not json").find("malformed JSON"), std::string::npos);
  EXPECT_NE(error_of(with("b", "[1, 2]")).find("rows(phi)"), std::string::npos);
}

TEST(LoadInstance, DecimalStringsAreExact) {
  const ProblemInstance p = load_instance(with("b", R"(["0.1"])"));
  EXPECT_EQ(p.b(0), 0.1);
}

TEST(LoadInstance, OptionalTolerances) {
  const ProblemInstance p = load_instance(with("tol", R"({"rank": 1e-8, "member": 1e-6, "kkt": 1e-9})"));
  EXPECT_EQ(p.tol.rank, 1e-8);
  EXPECT_EQ(p.tol.member, 1e-6);
  EXPECT_EQ(p.tol.kkt, 1e-9);
  EXPECT_THROW(load_instance(with("tol", R"({"kkt": 0})")), ValidationError);
}

TEST(SaveInstance, RoundTripIsIdempotent) {
  for (const DemoCase& c : demo_cases()) {
    const std::string once = save_instance(c.instance);
    const ProblemInstance back = load_instance(once);
    EXPECT_EQ(back.phi_matrix(), c.instance.phi_matrix()) << c.name;
    EXPECT_EQ(back.k_matrix(), c.instance.k_matrix()) << c.name;
    EXPECT_EQ(back.b, c.instance.b) << c.name;
    EXPECT_EQ(save_instance(back), once) << c.name;
    EXPECT_EQ(instance_hash(back), instance_hash(c.instance)) << c.name;
  }
}

TEST(InstanceHash, SensitiveToData) {
  ProblemInstance a = demo::scalar_lasso();
  ProblemInstance b = a;
  b.b(0) = 3.0000001;
  EXPECT_NE(instance_hash(a), instance_hash(b));
  EXPECT_EQ(instance_hash(a).size(), 16u);
}

TEST(SolutionPair, VBarFromData) {
  const ProblemInstance p = demo::lasso_segment();
  Vector x(2);
  x << 0.25, 0.75;
  const Vector v = compute_v_bar(p, x);
  EXPECT_NEAR(v(0), 1.0, 1e-15);
  EXPECT_NEAR(v(1), 1.0, 1e-15);
}

TEST(BundledInstances, AllLoad) {
  namespace fs = std::filesystem;
  int n = 0;
  for (const auto& e : fs::directory_iterator(ISOCALM_DATA_DIR)) {
    if (e.path().extension() != ".json") continue;
    EXPECT_NO_THROW(load_instance_file(e.path().string())) << e.path();
    ++n;
  }
  EXPECT_GE(n, 5);
}

TEST(SaveReport, VerdictAndWitnessFields) {
  CertificateReport r;
  r.x_bar = Vector::Zero(2);
  r.v_bar = Vector::Zero(2);
  r.y_used = Vector::Zero(2);
  r.cond_suf = TrivialityVerdict::make_trivial();
  r.cond_nes = {TrivialityVerdict::nontrivial, Vector::Constant(2, std::sqrt(0.5)), "", true};
  r.conclusion_solution_map = {Conclusion::not_isolated_calm, r.cond_nes.witness, "x", ""};
  const Json j = Json::parse(save_report(r));
  EXPECT_EQ(j["eq_Suf"], "holds");
  EXPECT_EQ(j["eq_Nes"], "fails");
  EXPECT_EQ(j["cond_nes"]["witness"].size(), 2u);
  EXPECT_EQ(j["conclusion_solution_map"]["kind"], "NotIsolatedCalm");

  const CertificateReport back = certificate_from_json(j);
  EXPECT_EQ(certificate_to_json(back), j);
}

TEST(SaveReport, SweepCsvAndJsonRoundTrip) {
  KappaEstimate k;
  k.radii = {0.1};
  k.kappa_hat_per_radius = {std::numeric_limits<double>::quiet_NaN()};
  for (int i = 0; i < 3; ++i) k.samples.push_back({0.1, 0.05, 0.01 * i, 0.3, 1.0 / 3.0, 12, i == 2 ? "nonlocal" : ""});
  k.samples[1].ratio = std::numeric_limits<double>::infinity();
  const std::string csv = save_report(k, "csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "radius,db_norm,dmu,x_dist,ratio,solver_iters,flag");

  const std::string text = save_report(k, "json");
  const KappaEstimate back = kappa_from_json(Json::parse(text));
  EXPECT_EQ(save_report(back, "json"), text);
  EXPECT_TRUE(std::isinf(back.samples[1].ratio));
  EXPECT_EQ(back.samples[0].ratio, 1.0 / 3.0);
  EXPECT_TRUE(std::isnan(back.kappa_hat_per_radius[0]));
  EXPECT_THROW(save_report(k, "xml"), ValidationError);
}
