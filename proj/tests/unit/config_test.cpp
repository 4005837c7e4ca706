#include "lcmdeconv/config.hpp"

#include <catch_amalgamated.hpp>

using namespace lcmdeconv;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

namespace {

std::size_t error_line(const std::string& text)
{
  try {
    experiment_plan_from(Config::parse(text, "t.toml"));
  } catch (const ConfigError& e) {
    return e.line();
  }
  return static_cast<std::size_t>(-1);
}

const char* kPlan = R"cfg(# comment
[study]
kind = "rejection_rate"   # trailing comment
nsr_levels = [0.1, 0.5]
n_levels = [200, 500]
M = 50
master_seed = 99
threads = 2

[target.t3]
spec = "mixture(0.2, weibull(3, 1), 0.8, beta(0.5, 0.75))"
parameter = 0.2

[target.w]
spec = "weibull(0.75, 1)"

[test]
B = 100
calibration = "log_threshold"

[bandwidth]
rule = "plug_in"
)cfg";

} // namespace

TEST_CASE("parse scalars, strings and arrays", "[config]")
{
  const auto c = Config::parse(R"cfg([a]
x = 1.5
n = -3
s = "he said \"hi\"\tok"
b = true
list = [1, 2.5 , 3e-2]
empty = []
[a.b]
y = 2
)cfg");
  CHECK(c.get_double("a", "x") == 1.5);
  CHECK(c.get_int("a", "n") == -3);
  CHECK(c.get_string("a", "s") == "he said \"hi\"\tok");
  CHECK(c.get_optional_bool("a", "b") == true);
  CHECK(c.get_double_list("a", "list") == std::vector<double>{1.0, 2.5, 0.03});
  CHECK(c.get_double_list("a", "empty").empty());
  CHECK(c.get_int("a.b", "y") == 2);
  CHECK_FALSE(c.get_optional_double("a", "missing").has_value());
  CHECK_FALSE(c.get_optional_double("nope", "x").has_value());
}

TEST_CASE("syntax and type errors carry line numbers", "[config]")
{
  const auto line_of = [](const std::string& text) {
    try {
      Config::parse(text, "t.toml");
    } catch (const ConfigError& e) {
      return e.line();
    }
    return static_cast<std::size_t>(-1);
  };
  CHECK(line_of("x = 1\n") == 1);
  CHECK(line_of("[a]\nx = 1\nx = 2\n") == 3);
  CHECK(line_of("[a]\n[a]\n") == 2);
  CHECK(line_of("[a]\nx = \"open\n") == 2);
  CHECK(line_of("[a]\nx = [1, 2\n") == 2);
  CHECK(line_of("[a]\njunk\n") == 2);
  CHECK(line_of("[a\n") == 1);

  const auto c = Config::parse("[a]\nx = \"text\"\n", "t.toml");
  try {
    c.get_double("a", "x");
    FAIL("expected a type error");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 2);
    CHECK_THAT(e.what(), ContainsSubstring("t.toml:2"));
  }
  CHECK_THROWS_AS(c.get_double("a", "y"), ConfigError);
}

TEST_CASE("experiment plan from a file", "[config]")
{
  const auto plan = experiment_plan_from(Config::parse(kPlan, "plan.toml"));
  CHECK(plan.study == Study::rejection_rate);
  CHECK(plan.nsr_levels == std::vector<double>{0.1, 0.5});
  CHECK(plan.n_levels == std::vector<std::size_t>{200, 500});
  CHECK(plan.M == 50);
  CHECK(plan.master_seed == 99);
  CHECK(plan.threads == 2);
  REQUIRE(plan.targets.size() == 2);
  CHECK(plan.targets[0].label == "t3");
  CHECK(plan.targets[0].parameter == 0.2);
  CHECK(plan.targets[1].parameter == 0.0);
  CHECK(plan.test_cfg.B == 100);
  CHECK(plan.test_cfg.calibration == Calibration::log_threshold);
  CHECK(plan.options.bandwidth_rule == BandwidthRule::plug_in);
  CHECK(plan.sg_convention == SgVariance::gamma_second_moment);
}

TEST_CASE("plan errors point at the offending line", "[config]")
{
  std::string text = kPlan;
  CHECK(error_line(std::string(text).replace(text.find("B = 100"), 7, "B = 10")) == 18);
  CHECK(error_line(std::string(text).replace(text.find("M = 50"), 6, "M = 5")) == 6);
  CHECK(error_line(std::string(text).replace(text.find("weibull(0.75"), 12, "weibull(-1")) == 15);
  CHECK(error_line(text + "bogus = 1\n") == 23);
  CHECK(error_line(std::string(text).replace(text.find("plug_in"), 7, "magic")) == 22);
  CHECK_THROWS_AS(experiment_plan_from(Config::parse("[target.x]\nspec = \"beta(1, 1)\"\n")),
                  ConfigError);
}

TEST_CASE("estimator and test sections", "[config]")
{
  const auto c = Config::parse(R"cfg([kernel]
r = 4
s = 2
[grid]
points = 512
[bandwidth]
h = 0.3
[error]
model = "laplace(0.2)"
[test]
gamma = 0.05
seed = 18446744073709551615
bootstrap_bandwidth = 0.4
)cfg");
  const auto o = deconv_options_from(c);
  CHECK(o.kernel.r() == 4);
  CHECK(o.kernel.s() == 2);
  CHECK(o.grid_points == 512);
  CHECK(o.bandwidth == 0.3);
  CHECK(error_model_from(c).describe() == "laplace(0.2)");
  const auto t = test_config_from(c);
  CHECK(t.gamma == 0.05);
  CHECK(t.seed == 18446744073709551615ull);
  CHECK(t.bootstrap_bandwidth == 0.4);

  CHECK(error_model_from(Config::parse("")).is_none());
  CHECK_THROWS_AS(deconv_options_from(Config::parse("[kernel]\nr = 3\n")), ConfigError);
  CHECK_THROWS_AS(deconv_options_from(Config::parse("[bandwidth]\nh = 0\n")), ConfigError);
  CHECK_THROWS_AS(error_model_from(Config::parse("[error]\nmodel = \"laplace(-1)\"\n")),
                  ConfigError);
  CHECK_THROWS_AS(test_config_from(Config::parse("[test]\nB = 49\n")), ConfigError);
  CHECK_THROWS_AS(test_config_from(Config::parse("[test]\ngamma = 0.7\n")), ConfigError);
}

TEST_CASE("unknown sections are reported", "[config]")
{
  const auto c = Config::parse("[study]\n[target.a]\n[weird]\n");
  CHECK_NOTHROW(c.require_known_sections({"study", "weird"}, {"target."}));
  try {
    c.require_known_sections({"study"}, {"target."});
    FAIL("expected an unknown-section error");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("shipped configuration files load", "[config]")
{
  for (const char* name :
       {"table_weak", "table_t3", "power_level", "mse_ratio", "log_threshold"}) {
    INFO(name);
    const auto c = Config::load(std::string(LCMDECONV_SOURCE_DIR) + "/configs/" + name + ".toml");
    CHECK_NOTHROW(experiment_plan_from(c));
  }
  CHECK_THROWS_AS(Config::load("/nonexistent/file.toml"), ArgumentError);
}
