// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails. Pass criterion numbers as arguments to
// run a subset, e.g. `acceptance 5 7`.

#include "lcmdeconv/concavity_test.hpp"
#include "lcmdeconv/config.hpp"
#include "lcmdeconv/deconv.hpp"
#include "lcmdeconv/experiments.hpp"
#include "lcmdeconv/lcm.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>

using namespace lcmdeconv;

namespace {

struct Outcome
{
  bool pass;
  std::string detail;
};

std::string fmt(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

unsigned worker_count()
{
  return std::max(1u, std::thread::hardware_concurrency());
}

ExperimentPlan load_plan(const std::string& name)
{
  ExperimentPlan plan = experiment_plan_from(
    Config::load(std::string(LCMDECONV_SOURCE_DIR) + "/configs/" + name + ".toml"));
  plan.threads = worker_count();
  return plan;
}

const StudyRow& row_for(const StudyResult& r, const std::string& target, std::size_t n, double nsr,
                        std::optional<double> q = std::nullopt)
{
  for (const auto& row : r.rows)
    if (row.target == target && row.n == n && row.nsr == nsr && row.quantile == q)
      return row;
  throw std::runtime_error("no row for " + target);
}

std::string rate_text(const StudyRow& row)
{
  return row.target + " n=" + std::to_string(row.n) + " nsr=" + fmt(row.nsr) + ": " +
         fmt(row.rejection_rate) + " (se " + fmt(row.standard_error) + ", " +
         std::to_string(row.failures) + " failed)";
}

bool in_range(const StudyRow& row, double lo, double hi)
{
  return row.valid && row.rejection_rate >= lo && row.rejection_rate <= hi;
}

Outcome table_weak()
{
  const auto r = run_study(load_plan("table_weak"));
  const auto& row = row_for(r, "exp_uniform", 500, 0.1);
  return {in_range(row, 0.06, 0.14), rate_text(row) + ", want [0.06, 0.14]"};
}

Outcome table_t3()
{
  const auto r = run_study(load_plan("table_t3"));
  const auto& low = row_for(r, "weibull_beta", 500, 0.1);
  const auto& high = row_for(r, "weibull_beta", 500, 0.5);
  return {in_range(low, 0.51, 0.68) && in_range(high, 0.04, 0.17),
          rate_text(low) + ", want [0.51, 0.68]; " + rate_text(high) + ", want [0.04, 0.17]"};
}

Outcome level_and_power()
{
  const auto r = run_study(load_plan("power_level"));
  const auto& b = row_for(r, "beta_075", 500, 0.1);
  const auto& w = row_for(r, "weibull_075", 500, 0.1);
  const auto& p = row_for(r, "weibull_160", 500, 0.1);
  return {in_range(b, 0.0, 0.05) && in_range(w, 0.0, 0.05) && in_range(p, 0.9, 1.0),
          rate_text(b) + ", want <= 0.05; " + rate_text(w) + ", want <= 0.05; " + rate_text(p) +
            ", want >= 0.9"};
}

Outcome mse_ratio()
{
  const auto r = run_study(load_plan("mse_ratio"));
  bool pass = true;
  std::string detail;
  for (const double q : {0.8, 0.9}) {
    const auto& row = row_for(r, "weibull_075", 100, 0.1, q);
    pass = pass && row.valid && row.ratio < 1.0;
    detail += "q=" + fmt(q) + " ratio " + fmt(row.ratio) + " (" + fmt(row.mse_constrained) + " / " +
              fmt(row.mse_unconstrained) + "); ";
  }
  return {pass, detail + "want < 1"};
}

Outcome oracles()
{
  std::mt19937_64 rng(20240606);
  std::ostringstream detail;
  bool pass = true;

  // LCM against the chord oracle.
  std::uniform_int_distribution<std::size_t> size(2, 60);
  std::size_t lcm_bad = 0;
  double lcm_worst = 0.0;
  for (int rep = 0; rep < 500; ++rep) {
    const auto g = oracle::random_grid(rng, size(rng));
    const auto got = lcm(GridFunction(g.xs, g.ys)).values_on(g.xs);
    const auto ref = oracle::chord_lcm(g.xs, g.ys);
    bool ok = true;
    for (std::size_t k = 0; k < ref.size(); ++k) {
      const double d = std::abs(got[k] - ref[k]);
      lcm_worst = std::max(lcm_worst, d);
      ok = ok && d <= 1e-12 * std::max(1.0, std::abs(ref[k]));
    }
    lcm_bad += ok ? 0 : 1;
  }
  pass = pass && lcm_bad == 0;
  detail << "lcm: " << lcm_bad << "/500 grids differ (max diff " << fmt(lcm_worst) << "); ";

  // Slope against max-min, tolerance one slope quantum of the grid.
  std::size_t slope_bad = 0;
  for (int rep = 0; rep < 500; ++rep) {
    const auto g = oracle::random_grid(rng, size(rng));
    const auto env = lcm(GridFunction(g.xs, g.ys));
    double quantum = 0.0;
    for (std::size_t i = 1; i < g.xs.size(); ++i)
      quantum = std::max(quantum, std::abs(g.ys[i] - g.ys[i - 1]) / (g.xs[i] - g.xs[i - 1]));
    for (std::size_t i = 0; i + 1 < g.xs.size(); ++i) {
      const double x = 0.5 * (g.xs[i] + g.xs[i + 1]);
      if (std::abs(lcm_slope(env, x) - oracle::maxmin_slope(g.xs, g.ys, x)) > 1e-9 * quantum)
        ++slope_bad;
    }
  }
  pass = pass && slope_bad == 0;
  detail << "slope: " << slope_bad << " mismatches; ";

  // NoError deconvolution against the direct kernel sum.
  std::normal_distribution<double> nd(1.0, 2.0);
  std::uniform_real_distribution<double> hd(0.05, 1.0);
  std::uniform_int_distribution<int> nn(1, 50);
  double kde_worst = 0.0;
  const auto grid = uniform_grid(-6.0, 8.0, 141);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> y(static_cast<std::size_t>(nn(rng)));
    for (auto& v : y)
      v = nd(rng);
    const double h = hd(rng);
    const auto d = estimate_density(y, ErrorModel::none(), KernelSpec(), h, grid);
    const auto ref = oracle::kernel_sum(y, grid, h);
    for (std::size_t j = 0; j < grid.size(); ++j)
      kde_worst = std::max(kde_worst, std::abs(d.ys()[j] - ref[j]));
  }
  pass = pass && kde_worst < 1e-6;
  detail << "kernel sum: sup diff " << fmt(kde_worst) << " (want < 1e-6); ";

  // Marshall's inequality.
  std::size_t marshall_bad = 0;
  std::normal_distribution<double> noise(0.0, 0.3);
  std::uniform_real_distribution<double> u(0.2, 3.0);
  for (int rep = 0; rep < 200; ++rep) {
    const auto xs = uniform_grid(0.0, u(rng), 50);
    const double a = u(rng), b = u(rng);
    std::vector<double> g0, g1;
    for (double x : xs) {
      g0.push_back(a * (1.0 - std::exp(-b * x)));
      g1.push_back(g0.back() + noise(rng));
    }
    const auto mb = marshall_check(GridFunction(xs, g1), GridFunction(xs, g0));
    marshall_bad += mb.lhs <= mb.rhs + 1e-12 ? 0 : 1;
  }
  pass = pass && marshall_bad == 0;
  detail << "marshall: " << marshall_bad << "/200 violations";
  return {pass, detail.str()};
}

Outcome invariant_suites()
{
  const std::string cmd = std::string("\"") + UNIT_TESTS_PATH + "\" \"[property]\" > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return {rc == 0, "property tests exit status " + std::to_string(rc)};
}

Outcome log_threshold()
{
  const auto r = run_study(load_plan("log_threshold"));
  const auto& a = row_for(r, "weibull_075", 200, 0.1);
  const auto& b = row_for(r, "weibull_075", 500, 0.1);
  return {in_range(a, 0.0, 0.02) && in_range(b, 0.0, 0.02),
          rate_text(a) + "; " + rate_text(b) + ", want <= 0.02"};
}

} // namespace

int main(int argc, char** argv)
{
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
    {"Weak table reproduction", table_weak},
    {"T3 table reproduction", table_t3},
    {"level and power direction", level_and_power},
    {"MSE ratio direction", mse_ratio},
    {"oracle equivalences", oracles},
    {"invariant suites", invariant_suites},
    {"conservative log-threshold calibration", log_threshold},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i)
    wanted.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!wanted.empty() && !wanted.count(id))
      continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].first
              << "): " << o.detail << " [" << fmt(secs) << " s]" << std::endl;
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
