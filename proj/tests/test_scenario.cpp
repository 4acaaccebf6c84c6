#include <gtest/gtest.h>

#include <cmath>

#include "juntakit/errors.hpp"
#include "juntakit/scenario.hpp"

using namespace juntakit;

TEST(Config, SectionsAndComments) {
  const auto cfg = parse_config(
      "# comment\n"
      "command = verify\n"
      "[scenario]\n"
      "space = cube:n=3\n"
      "\n"
      "[grid]\n"
      "t = 0.1, 0.2\n"
      "m = 2..4\n",
      "test.cfg");
  EXPECT_EQ(cfg.scenario.at("command"), "verify");
  EXPECT_EQ(cfg.scenario.at("space"), "cube:n=3");
  ASSERT_EQ(cfg.grid.size(), 2u);
  EXPECT_EQ(cfg.grid[0].first, "t");
  EXPECT_EQ(cfg.grid[0].second, (std::vector<std::string>{"0.1", "0.2"}));
  EXPECT_EQ(cfg.grid[1].second, (std::vector<std::string>{"2", "3", "4"}));
}

TEST(Config, ErrorsCarryLocation) {
  try {
    parse_config("a = 1\nbroken line\n", "bad.cfg");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.cfg:2:"), std::string::npos);
  }
  EXPECT_THROW(parse_config("[other]\n"), ParseError);
  EXPECT_THROW(parse_config("a = 1\na = 2\n"), ParseError);
  EXPECT_THROW(parse_config("[grid]\nm = 5..2\n"), ParseError);
}

TEST(Descriptors, Parsing) {
  const auto d = parse_descriptor("planted-junta:k=2,noise=0.01");
  EXPECT_EQ(d.kind, "planted-junta");
  EXPECT_EQ(d.params.at("k"), "2");
  EXPECT_EQ(d.params.at("noise"), "0.01");
  EXPECT_EQ(parse_descriptor("majority").kind, "majority");
  EXPECT_EQ(parse_descriptor("file:/tmp/a,b.txt").params.at("path"), "/tmp/a,b.txt");
  EXPECT_THROW(parse_descriptor("cube:n"), UsageError);
}

TEST(Descriptors, Spaces) {
  EXPECT_EQ(parse_space("cube:n=3,p=0.3")->size(), 8u);
  EXPECT_EQ(parse_space("product:m=2x3")->size(), 6u);
  EXPECT_EQ(parse_space("torus:n=2,m=3")->size(), 9u);
  EXPECT_EQ(parse_space("slice:n=5,k=2")->size(), 10u);
  EXPECT_EQ(parse_space("symmetric:n=4")->size(), 24u);
  EXPECT_THROW(parse_space("sphere:n=2"), UsageError);
  EXPECT_THROW(parse_space("cube:n=3,q=1"), UsageError);
  EXPECT_THROW(parse_space("cube:p=0.5"), UsageError);
  EXPECT_THROW(parse_space("cube:n=30"), CapacityError);
}

TEST(Descriptors, Functions) {
  const auto s = parse_space("cube:n=3");
  const auto dict = parse_function(s, "dictator:i=2");
  for (std::size_t x = 0; x < s->size(); ++x) EXPECT_EQ(dict[x], s->coordinates(x)[1]);
  const auto maj = parse_function(s, "majority");
  const auto par = parse_function(s, "parity");
  for (std::size_t x = 0; x < s->size(); ++x) {
    const auto c = s->coordinates(x);
    EXPECT_EQ(maj[x], c[0] + c[1] + c[2] > 0 ? 1.0 : -1.0);
    EXPECT_EQ(par[x], c[0] * c[1] * c[2]);
  }
  EXPECT_EQ(planted_coordinates("planted-junta:k=3"), (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_TRUE(planted_coordinates("random:seed=1").empty());
  EXPECT_THROW(parse_function(s, "dictator:i=4"), UsageError);
  EXPECT_THROW(parse_function(s, "file:/nonexistent/values.txt"), UsageError);
  const auto a = parse_function(s, "random:seed=5"), b = parse_function(s, "random:seed=5");
  for (std::size_t x = 0; x < s->size(); ++x) EXPECT_EQ(a[x], b[x]);
}

TEST(Run, EmptyCheckListIsAUsageError) {
  try {
    run_scenario("verify", {{"space", "cube:n=3"}, {"check", ""}});
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_STREQ(e.what(), "no checks requested");
  }
  EXPECT_THROW(run_scenario("verify", {{"space", "cube:n=3"}, {"check", "nonsense"}}), UsageError);
  EXPECT_THROW(run_scenario("frobnicate", {}), UsageError);
}

TEST(Run, VerifyExample) {
  const auto r = run_scenario(
      "verify", {{"space", "cube:n=6,p=0.5"}, {"fn", "random:seed=7"}, {"check", "lemma-la,bakry,hyper"}});
  EXPECT_EQ(r.report.rows().size(), 3u);
  EXPECT_EQ(r.report.failures(), 0u);
  EXPECT_EQ(r.report.csv().substr(0, 28), "check,left,right,slack,pass\n");
}

TEST(Run, JuntaExtractExample) {
  const auto r = run_scenario(
      "junta-extract", {{"space", "torus:n=3,m=3"}, {"fn", "planted-junta:k=2,noise=0.01"}, {"eps", "0.2"}});
  EXPECT_EQ(r.report.failures(), 0u);
  ASSERT_EQ(r.certificates.size(), 1u);
  EXPECT_NE(r.certificates[0].find("kept_set="), std::string::npos);
}

TEST(Sweep, GridCardinalityAndOrder) {
  Config cfg;
  cfg.scenario = {{"command", "verify"}, {"space", "cube:n=6"}, {"fn", "tribes:w=2"}, {"check", "lemma-la"},
                  {"rho", "1"}};
  cfg.grid = {{"t", {"0.1", "0.2", "0.4"}}, {"eta", {"0.05", "0.1"}}};
  const auto r = run_sweep(cfg);
  ASSERT_EQ(r.report.rows().size(), 6u);
  EXPECT_EQ(r.report.rows()[0].name, "lemma-la@t=0.1;eta=0.05");
  EXPECT_EQ(r.report.rows()[1].name, "lemma-la@t=0.1;eta=0.1");
  EXPECT_EQ(r.report.rows()[5].name, "lemma-la@t=0.4;eta=0.1");
}

TEST(Sweep, TorusGapFormulaPerPoint) {
  const auto cfg = parse_config("command = verify\nspace = torus:n=1,m={m}\ncheck = gap\n[grid]\nm = 2..8\n");
  const auto r = run_sweep(cfg);
  ASSERT_EQ(r.report.rows().size(), 7u);
  for (std::size_t i = 0; i < 7; ++i) {
    const double m = 2.0 + static_cast<double>(i);
    EXPECT_NEAR(r.report.rows()[i].lhs, (1.0 - std::cos(2.0 * std::acos(-1.0) / m)) / 2.0, 1e-9);
    EXPECT_TRUE(r.report.rows()[i].pass);
  }
}

TEST(Sweep, EmptyGridIsAUsageError) {
  EXPECT_THROW(run_sweep(parse_config("command = verify\n[grid]\n")), UsageError);
}

TEST(Sweep, Deterministic) {
  const auto cfg = parse_config(
      "command = verify\nspace = cube:n=4\nfn = random:seed={s}\ncheck = hyper,bakry\n[grid]\ns = 1..3\n");
  EXPECT_EQ(run_sweep(cfg).report.csv(), run_sweep(cfg).report.csv());
}

TEST(Report, NumberFormatting) {
  EXPECT_EQ(format_number(0.0), "0");
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_EQ(format_number(1.0 / 0.0), "inf");
  EXPECT_EQ(format_number(-1.0 / 0.0), "-inf");
  Report r;
  r.add(make_report("a", 1.0, 2.0, 0.0));
  r.add(make_report("b", 3.0, 2.0, 0.0));
  EXPECT_EQ(r.failures(), 1u);
  EXPECT_EQ(r.csv(), "check,left,right,slack,pass\na,1,2,1,true\nb,3,2,-1,false\n");
  EXPECT_EQ(r.summary(), "checks=2 passed=1 failed=1 worst=b:-1");
}

TEST(Continuous, LineDescriptors) {
  const ProductLine p(build_line_model(gaussian_potential(), LineOptions{31, 30.0, 12}), 2);
  EXPECT_EQ(parse_line_function(p, "linear:i=2").size(), p.size());
  EXPECT_THROW(parse_line_function(p, "linear:i=3"), UsageError);
  EXPECT_EQ(parse_grid_set(p, "halfspace:i=1,a=0").monotonicity, Monotonicity::Decreasing);
  EXPECT_EQ(parse_grid_set(p, "union:a=0,b=1").monotonicity, Monotonicity::Increasing);
  EXPECT_THROW(parse_grid_set(p, "disc"), UsageError);
}
