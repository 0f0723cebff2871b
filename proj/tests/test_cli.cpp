#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "levi/config.hpp"
#include "levi/expr.hpp"
#include "levi/runner.hpp"

using namespace levi;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse(const std::string& text, const ConfigOverrides& o = {}) {
  std::istringstream is(text);
  return parse_config(is, o);
}

std::string validation_message(const std::string& text) {
  try {
    parse(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::validation);
    return e.what();
  }
  ADD_FAILURE() << "config was accepted";
  return {};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

const char* minimal = R"([model]
preset = cauchy-constant
[grid]
steps = 16
step = 1/8
[verify]
bounds = p0, eq16, eq17
times = 1/16, 1/8, 1/4, 1/2, 1
[run]
seed = 4
experiments = verify
)";

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("levi_cli_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Expression, ArithmeticAndFunctions) {
  auto e = Expression::parse("1 + 0.5*sin(x)^2*exp(-abs(z))");
  EXPECT_NEAR(e(0.7, -0.3), 1 + 0.5 * std::pow(std::sin(0.7), 2) * std::exp(-0.3), 1e-15);
  EXPECT_TRUE(e.uses('x'));
  EXPECT_TRUE(e.uses('z'));
  EXPECT_DOUBLE_EQ(Expression::parse("-2^2")(0), -4.0);
  EXPECT_DOUBLE_EQ(Expression::parse("2^-1")(0), 0.5);
  EXPECT_DOUBLE_EQ(Expression::parse("2*pi/4 - 1/2 * 3")(0), pi / 2 - 1.5);
  EXPECT_DOUBLE_EQ(Expression::parse("min2(x, 1) + max2(x, 1)")(3.0), 4.0);
  EXPECT_DOUBLE_EQ(Expression::parse("sqrt(abs(x))")(-4.0), 2.0);
}

TEST(Expression, ErrorsNameTheColumn) {
  for (const char* bad : {"1 +", "sin(x", "foo(x)", "x y", "2 ** 3"}) {
    try {
      Expression::parse(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::validation);
      EXPECT_NE(std::string(e.what()).find("column"), std::string::npos) << e.what();
    }
  }
}

TEST(Config, PresetAndDependencies) {
  auto c = parse(minimal);
  EXPECT_EQ(c.preset, "cauchy-constant");
  EXPECT_EQ(c.experiments, (std::vector<std::string>{"assemble", "verify"}));
  EXPECT_EQ(c.seed, 4u);
  EXPECT_EQ(c.grid.steps, 16);
  EXPECT_DOUBLE_EQ(c.grid.step, 0.125);
  auto d = parse("[model]\npreset = default-test\n[run]\nseed = 1\nexperiments = compare\n");
  EXPECT_EQ(d.experiments, (std::vector<std::string>{"assemble", "simulate", "compare"}));
}

TEST(Config, InlineModelMatchesPreset) {
  auto c = parse(R"([model]
kappa = 1 + 0.5*sin(x)^2*exp(-abs(z))
b = 0.5*cos(x)
kappa0 = 1
kappa1 = 1.5
kappa2 = 0.5
b_sup = 0.5
b_holder = 1
period = 2*pi
[run]
seed = 1
experiments = assemble
)");
  const auto p = presets::default_test();
  for (double x : {-1.0, 0.0, 2.5})
    for (double z : {0.01, 1.0, 3.0}) EXPECT_NEAR(c.model.kappa(x, z), p.kappa(x, z), 1e-15);
  EXPECT_NEAR(c.model.b(0.4), p.b(0.4), 1e-15);
}

TEST(Config, HolderExponentOutOfRangeNamesTheField) {
  const auto msg = validation_message(R"([model]
kappa = 1 + 0.5*sin(x)^2*exp(-abs(z))
kappa1 = 1.5
kappa2 = 0.5
beta = 1.5
[run]
seed = 1
experiments = assemble
)");
  EXPECT_NE(msg.find("model.beta"), std::string::npos) << msg;
  EXPECT_NE(msg.find("(0, 1]"), std::string::npos) << msg;
}

TEST(Config, RejectsBadInput) {
  EXPECT_NE(validation_message("[model]\npreset = nope\n[run]\nseed = 1\nexperiments = assemble\n").find("model.preset"),
            std::string::npos);
  EXPECT_NE(validation_message("[model]\npreset = cauchy-constant\n[run]\nexperiments = assemble\n").find("run.seed"),
            std::string::npos);
  EXPECT_NE(validation_message("[model]\npreset = cauchy-constant\n[grid]\nstep = abc\n[run]\nseed = 1\n"
                               "experiments = assemble\n")
                .find("grid.step"),
            std::string::npos);
  EXPECT_NE(validation_message("[model]\npreset = cauchy-constant\n[grid]\nstesp = 2\n[run]\nseed = 1\n"
                               "experiments = assemble\n")
                .find("grid.stesp"),
            std::string::npos);
  EXPECT_NE(validation_message("[model]\npreset = cauchy-constant\nbeta = 0.5\n[run]\nseed = 1\n"
                               "experiments = assemble\n")
                .find("model.beta"),
            std::string::npos);
  EXPECT_NE(validation_message("[model]\npreset = cauchy-constant\n[run]\nseed = 1\nexperiments = fly\n")
                .find("run.experiments"),
            std::string::npos);
  EXPECT_NE(validation_message("[model]\npreset = cauchy-constant\n[verify]\nbounds = p0, zz\n[run]\nseed = 1\n"
                               "experiments = verify\n")
                .find("verify.bounds"),
            std::string::npos);
  // The model check catches a declared bound the coefficients violate.
  EXPECT_NE(validation_message("[model]\nkappa = 1 + 0.5*sin(x)^2\nkappa1 = 1.2\nkappa2 = 1\n[run]\nseed = 1\n"
                               "experiments = assemble\n")
                .find("model"),
            std::string::npos);
}

TEST(Config, OverridesAndHash) {
  auto a = parse(minimal);
  ConfigOverrides o;
  o.out = "/somewhere/else";
  o.workers = 3;
  auto b = parse(minimal, o);
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(b.out, "/somewhere/else");
  EXPECT_EQ(b.workers, 3);
  o.seed = 9;
  auto c = parse(minimal, o);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_NE(a.hash(), c.hash());
  ConfigOverrides t;
  t.tolerance = 1e-4;
  EXPECT_DOUBLE_EQ(parse(minimal, t).grid.tolerance, 1e-4);
}

TEST(Presets, AllValidateAndKatoSigmaDeclaresH) {
  EXPECT_GE(presets::names().size(), 4u);
  for (const auto& n : presets::names()) EXPECT_NO_THROW(presets::by_name(n).validate()) << n;
  const auto k = kato_check(presets::kato_sigma());
  EXPECT_TRUE(k.declared);
  EXPECT_TRUE(k.norm.finite);
  EXPECT_NEAR(k.norm.value, 0.75 * 4, 1e-8);
}

TEST(Runner, MinimalRunWritesReports) {
  const auto dir = scratch("minimal");
  ConfigOverrides o;
  o.out = dir.string();
  std::ostringstream log;
  const auto r = run_experiments(parse(minimal, o), log);
  EXPECT_EQ(r.bounds_total, 3);
  EXPECT_FALSE(fs::exists(dir / artifact::failed));
  const auto j = nlohmann::json::parse(slurp(dir / artifact::bounds));
  std::vector<std::string> ids;
  for (const auto& b : j["bounds"]) ids.push_back(b["id"]);
  EXPECT_EQ(ids, (std::vector<std::string>{"p0", "eq16", "eq17"}));
  const auto m = nlohmann::json::parse(slurp(dir / artifact::manifest));
  EXPECT_EQ(m["status"], "ok");
  EXPECT_EQ(m["config_hash"], io::hex(parse(minimal).hash()));
  EXPECT_TRUE(m["wall_seconds"].contains("assemble"));
  EXPECT_TRUE(fs::exists(dir / artifact::kernel));
  fs::remove_all(dir);
}

TEST(Runner, SameConfigGivesIdenticalArtifacts) {
  const std::string text = R"([model]
preset = kato-sigma
[grid]
steps = 16
step = 1/8
[simulate]
paths = 10000
dt = 1/64
record_dt = 1/8
[compare]
time = 1/2
[uniqueness]
paths = 50
dts = 1/16, 1/32, 1/64
[run]
seed = 12
experiments = compare, uniqueness
)";
  const auto a = scratch("det_a"), b = scratch("det_b");
  std::ostringstream log;
  ConfigOverrides oa, ob;
  oa.out = a.string();
  ob.out = b.string();
  ob.workers = 2;
  run_experiments(parse(text, oa), log);
  run_experiments(parse(text, ob), log);
  int compared = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    const auto name = e.path().filename();
    if (name == artifact::manifest) continue;
    EXPECT_EQ(slurp(e.path()), slurp(b / name)) << name;
    ++compared;
  }
  EXPECT_GE(compared, 5);
  const auto csv = slurp(a / artifact::paths);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "path_id,t,x_1");
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Runner, RuntimeFailureLeavesMarker) {
  // 100 paths are too few for the density estimate: compare fails after simulate has written its paths.
  const std::string text = R"([model]
preset = cauchy-constant
[grid]
steps = 16
step = 1/8
[simulate]
paths = 100
dt = 1/64
record_dt = 1/8
[compare]
time = 1/2
[run]
seed = 1
experiments = compare
)";
  const auto dir = scratch("fail");
  ConfigOverrides o;
  o.out = dir.string();
  std::ostringstream log;
  EXPECT_THROW(run_experiments(parse(text, o), log), Error);
  EXPECT_TRUE(fs::exists(dir / artifact::failed));
  EXPECT_TRUE(fs::exists(dir / artifact::paths));
  const auto m = nlohmann::json::parse(slurp(dir / artifact::manifest));
  EXPECT_EQ(m["status"], "failed");
  fs::remove_all(dir);
}
