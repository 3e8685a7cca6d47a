#include "gauge_quad/catalog.hpp"
#include "gauge_quad/cli.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <sys/wait.h>

using namespace gauge_quad;

namespace {

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "gauge_quad");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_command(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// Runs the installed binary through the shell; stdout only.
CliRun run_binary(const std::string& args) {
  const char* exe = std::getenv("GAUGE_QUAD_CLI");
  if (!exe) return {-1, "", "GAUGE_QUAD_CLI not set"};
  const std::string cmd = std::string(exe) + " " + args + " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  CliRun r;
  std::array<char, 4096> buf;
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace

TEST(Catalog, IdsAndLookup) {
  const auto cases = catalog_cases();
  EXPECT_GE(cases.size(), 8U);
  std::set<std::string> ids;
  for (const CatalogCase& c : cases) {
    EXPECT_TRUE(ids.insert(c.id).second) << c.id;
    EXPECT_EQ(c.make_region().dim(), c.m) << c.id;
    EXPECT_EQ(parse_box(c.box).dim(), c.m) << c.id;
    EXPECT_EQ(c.f.dim_in(), c.m) << c.id;
    EXPECT_EQ(c.f.dim_out(), c.d) << c.id;
    EXPECT_EQ(c.expected.dim(), c.d) << c.id;
  }
  for (const char* id : {"inv_sqrt", "exp_decay", "hk_only", "ae_zero", "square_minus_segment", "vector_valued"}) {
    EXPECT_TRUE(ids.count(id)) << id;
  }
  EXPECT_THROW(catalog_case("nope"), std::invalid_argument);
}

// Expected values recomputed from antiderivatives written out here.
TEST(Catalog, ExpectedValuesAgainstClosedForms) {
  const double snapped = 1.0 - std::cos(3.140625);
  const std::map<std::string, std::vector<double>> closed{
      {"const_1d", {1.0}},
      {"const_2d", {1.0}},
      {"const_3d", {1.0}},
      {"inv_sqrt", {2.0 * std::sqrt(1.0) - 2.0 * std::sqrt(0.0)}},
      {"exp_decay", {1.0 - 0.0}},
      {"gaussian_2d", {std::sqrt(std::numbers::pi) / 2.0 * std::sqrt(std::numbers::pi) / 2.0}},
      {"hk_only", {std::sin(1.0)}},
      {"ae_zero", {0.0}},
      {"square_minus_segment", {1.0}},
      {"vector_valued", {1.0, 0.5}},
      {"disc2d", {std::acos(-1.0)}},
      {"poly_1d", {1.0 / 3.0}},
      {"sin_sin_2d", {snapped * snapped}},
  };
  for (const CatalogCase& c : catalog_cases()) {
    const auto it = closed.find(c.id);
    ASSERT_NE(it, closed.end()) << c.id;
    for (std::size_t i = 0; i < c.d; ++i) EXPECT_NEAR(c.expected[i], it->second[i], 1e-15) << c.id;
  }
}

// ∂^m Φ / ∂t_1...∂t_m = f at interior points, by centered differences.
TEST(Catalog, PrimitiveDifferentiatesToIntegrand) {
  std::mt19937_64 rng(5);
  for (const CatalogCase& c : catalog_cases()) {
    if (!c.phi || c.id == "ae_zero") continue;
    const Box B = parse_box(c.box);
    const auto F = c.primitive();
    const double h = 1e-3;
    for (int k = 0; k < 20; ++k) {
      std::vector<double> lo(c.m), hi(c.m);
      Point t(c.m);
      for (std::size_t j = 0; j < c.m; ++j) {
        std::uniform_real_distribution<double> u(B.lo(j).to_double() + 0.05, B.hi(j).to_double() - 0.05);
        t[j] = u(rng);
        if (c.id == "hk_only") t[j] = std::max(t[j], 0.5);
        lo[j] = t[j] - h;
        hi[j] = t[j] + h;
      }
      const VectorValue diff = F(lo.data(), hi.data()).value;
      if (c.id == "disc2d" || c.id == "square_minus_segment") {
        // |I| for I inside G.
        EXPECT_NEAR(diff[0], std::pow(2.0 * h, 2.0), 1e-15) << c.id;
        continue;
      }
      const VectorValue f = c.f(t);
      for (std::size_t i = 0; i < c.d; ++i) {
        EXPECT_NEAR(diff[i] / std::pow(2.0 * h, static_cast<double>(c.m)), f[i], 1e-3 * std::max(1.0, std::abs(f[i])))
            << c.id;
      }
    }
  }
}

TEST(ParseFunction, Grammar) {
  EXPECT_EQ(parse_function("const:2.5", 2)(Point{0.1, 0.2})[0], 2.5);
  EXPECT_EQ(parse_function("poly:1,0,3", 1)(Point{2.0})[0], 13.0);
  EXPECT_EQ(parse_function("inv_sqrt", 1)(Point{0.25})[0], 2.0);
  EXPECT_THROW(parse_function("poly:1,x", 1), std::invalid_argument);
  EXPECT_THROW(parse_function("poly:1,2", 2), std::invalid_argument);
  EXPECT_THROW(parse_function("const:1,2", 1), std::invalid_argument);
  EXPECT_THROW(parse_function("wave:1", 1), std::invalid_argument);
}

TEST(Cli, CatalogList) {
  const CliRun r = run({"catalog", "list"});
  EXPECT_EQ(r.code, 0);
  std::size_t lines = 0;
  std::istringstream in(r.out);
  for (std::string line; std::getline(in, line);) lines += line.empty() ? 0 : 1;
  EXPECT_GE(lines, 8U);
  const CliRun j = run({"--report", "json", "catalog", "list"});
  const Json doc = Json::parse(j.out);
  EXPECT_EQ(doc["schema"], kSchema);
  EXPECT_EQ(doc["cases"].size(), catalog_cases().size());
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"integrate"}).code, 1);
  EXPECT_EQ(run({"--mode", "riemann", "hake", "--case", "inv_sqrt"}).code, 1);
  EXPECT_EQ(run({"integrate", "--function", "nope", "--box", "0..1"}).code, 1);
  EXPECT_EQ(run({"hake", "--function", "inv_sqrt", "--region", "open:0..1,0..1"}).code, 1);
  const CliRun bad = run({"divide", "--region", "square"});
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.err.find("error"), std::string::npos);
}

TEST(Cli, IntegrateJson) {
  const CliRun r = run({"--report", "json", "--tol", "1e-6", "integrate", "--function", "poly:0,0,1", "--box", "0..1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["schema"], kSchema);
  EXPECT_EQ(j["command"], "integrate");
  EXPECT_EQ(j["status"], "Converged");
  EXPECT_NEAR(j["value"][0].get<double>(), 1.0 / 3.0, 1e-6);
  EXPECT_FALSE(j["trace"].empty());
}

TEST(Cli, HakeInvSqrt) {
  const CliRun r = run({"--mode", "mcshane", "--tol", "1e-4", "--report", "json", "hake", "--function", "inv_sqrt",
                     "--region", "open:0..1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["schema"], kSchema);
  EXPECT_NEAR(j["value"][0].get<double>(), 2.0, 1e-4);
  EXPECT_EQ(j["verdict"], "PASS");
  for (const char* key : {"status", "hake_report", "variation_estimate", "divisions"}) EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["divisions"].size(), 2U);
}

TEST(Cli, PartitionAndDivide) {
  const CliRun p = run({"--report", "json", "partition", "--box", "0..1,0..1", "--gauge", "const:0.3"});
  ASSERT_EQ(p.code, 0) << p.err;
  EXPECT_EQ(Json::parse(p.out)["cells"], 4);
  EXPECT_TRUE(Json::parse(p.out)["valid"].get<bool>());
  const CliRun d = run({"divide", "--region", "open:0..1", "--generations", "3"});
  ASSERT_EQ(d.code, 0) << d.err;
  std::size_t rows = 0;
  std::istringstream in(d.out);
  for (std::string line; std::getline(in, line);) rows += line.empty() ? 0 : 1;
  // Header plus two pieces per generation from 2 on.
  EXPECT_EQ(rows, 1U + 4U);
}

TEST(Cli, VerifyEquivalenceSeparatesKinds) {
  const CliRun m = run({"--mode", "mcshane", "--tol", "1e-3", "--report", "json", "verify-equivalence", "--case",
                     "hk_only"});
  EXPECT_EQ(m.code, 2) << m.err;
  const Json j = Json::parse(m.out);
  EXPECT_EQ(j["verdict"], "FAIL");
  EXPECT_EQ(j["variation_estimate"]["verdict"], "NON-VANISHING");
  EXPECT_GT(j["variation_estimate"]["lower_bound"].get<double>(), 0.0);
  EXPECT_TRUE(j.contains("equivalence"));
}

TEST(Cli, BinaryMatchesInProcess) {
  if (!std::getenv("GAUGE_QUAD_CLI")) GTEST_SKIP() << "GAUGE_QUAD_CLI not set";
  const CliRun a = run_binary("--report json --seed 3 --tol 1e-4 hake --case inv_sqrt");
  const CliRun b = run_binary("--report json --seed 3 --tol 1e-4 hake --case inv_sqrt");
  EXPECT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out, run({"--report", "json", "--seed", "3", "--tol", "1e-4", "hake", "--case", "inv_sqrt"}).out);
  EXPECT_EQ(run_binary("bogus").code, 1);
  EXPECT_EQ(run_binary("catalog list").code, 0);
}
