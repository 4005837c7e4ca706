#include "lcmdeconv/deconv.hpp"
#include "lcmdeconv/errors.hpp"

#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

using namespace lcmdeconv;
using Catch::Approx;

namespace {

std::vector<double> normal_data(std::uint64_t seed, std::size_t n, double mu = 0.0, double sd = 1.0)
{
  Rng rng(seed);
  std::normal_distribution<double> nd(mu, sd);
  std::vector<double> v(n);
  for (auto& x : v)
    x = nd(rng);
  return v;
}

std::vector<double> noisy_sample(const Target& t, const ErrorModel& em, std::uint64_t seed,
                                 std::size_t n)
{
  Rng rng(seed);
  auto y = t.sample(rng, n);
  const auto e = em.sample(rng, n);
  for (std::size_t i = 0; i < n; ++i)
    y[i] += e[i];
  return y;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b)
{
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

} // namespace

TEST_CASE("KernelSpec Fourier transform", "[deconv]")
{
  const KernelSpec k;
  CHECK(k.fourier(0.0) == 1.0);
  CHECK(k.fourier(1.0) == 0.0);
  CHECK(k.fourier(-1.0) == 0.0);
  CHECK(k.fourier(1.5) == 0.0);
  CHECK(k.fourier(0.5) == 0.984375);
  CHECK(k.fourier(-0.3) == k.fourier(0.3));
  CHECK(KernelSpec(2, 3).fourier(0.5) == Approx(0.421875));
  CHECK_THROWS_AS(KernelSpec(3, 1), ArgumentError);
  CHECK_THROWS_AS(KernelSpec(4, 0), ArgumentError);
}

TEST_CASE("empirical_char", "[deconv]")
{
  CHECK(empirical_char(std::vector<double>{0.0}, 2.7) == std::complex<double>(1.0, 0.0));
  const std::vector<double> pm{1.3, -1.3};
  const auto c = empirical_char(pm, 0.9);
  CHECK(c.real() == Approx(std::cos(1.3 * 0.9)));
  CHECK(c.imag() == Approx(0.0).margin(1e-15));
  const std::vector<double> d{1.0, 2.0, 3.0};
  const auto z = empirical_char(d, 0.7);
  const auto ref = oracle::direct_char(d, 0.7);
  CHECK(std::abs(z - ref) < 1e-15);
  CHECK_THROWS_AS(empirical_char(std::vector<double>{}, 1.0), ArgumentError);
}

TEST_CASE("empirical_char on a frequency grid matches the pointwise form", "[deconv]")
{
  const auto y = normal_data(31, 300, 2.0, 3.0);
  const FreqGrid fg(40.0, 1000);
  const auto phi = empirical_char(y, fg);
  double worst = 0.0;
  for (std::size_t k = 0; k < fg.n_nodes; ++k)
    worst = std::max(worst, std::abs(phi[k] - oracle::direct_char(y, fg.node(k))));
  CHECK(worst < 1e-12);
  CHECK(phi[0] == std::complex<double>(1.0, 0.0));
}

TEST_CASE("NoError density matches the direct kernel sum", "[deconv]")
{
  const auto y = normal_data(32, 50);
  const auto grid = uniform_grid(-4.0, 4.0, 161);
  for (const double h : {0.05, 0.1, 0.3, 1.0}) {
    const auto d = estimate_density(y, ErrorModel::none(), KernelSpec(), h, grid);
    const auto ref = oracle::kernel_sum(y, grid, h);
    INFO("h = " << h);
    CHECK(max_abs_diff(d.ys(), ref) < 1e-6);
  }
}

TEST_CASE("density estimate integrates to about one", "[deconv]")
{
  const auto y = normal_data(33, 50);
  const auto grid = uniform_grid(-12.0, 12.0, 2001);
  const auto d = estimate_density(y, ErrorModel::none(), KernelSpec(), 0.4, grid);
  CHECK(cum_trapezoid(d).back_y() == Approx(1.0).margin(0.01));
}

TEST_CASE("estimate_density rejects bad input", "[deconv]")
{
  const std::vector<double> y{1.0, 2.0};
  const auto grid = uniform_grid(0.0, 1.0, 10);
  CHECK_THROWS_AS(estimate_density(y, ErrorModel::none(), KernelSpec(), 0.0, grid), ArgumentError);
  CHECK_THROWS_AS(estimate_density({}, ErrorModel::none(), KernelSpec(), 1.0, grid), ArgumentError);
  CHECK_THROWS_AS(estimate_density(y, ErrorModel::laplace(1.0), KernelSpec(), 1e-7, grid),
                  IllPosedError);
}

TEST_CASE("estimate_cdf on hand-made densities", "[deconv]")
{
  const auto xs = uniform_grid(0.0, 2.0, 201);
  std::vector<double> ys(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    ys[i] = xs[i] <= 1.0 ? 1.0 : 0.0;
  const auto c = estimate_cdf(GridFunction(xs, ys));
  CHECK(c.cdf_raw(0.5) == Approx(0.5));
  CHECK(c.limit_value == Approx(1.0).margin(0.01));

  for (auto& y : ys)
    y *= 0.8;
  const auto c8 = estimate_cdf(GridFunction(xs, ys));
  CHECK(c8.cdf_norm.back_y() == Approx(1.0));
  CHECK(c8.cdf_norm(0.5) == Approx(0.5 / c.limit_value).epsilon(1e-12));

  for (auto& y : ys)
    y *= 0.1;
  try {
    estimate_cdf(GridFunction(xs, ys));
    FAIL("expected DegenerateNormalizerError");
  } catch (const DegenerateNormalizerError& e) {
    CHECK(e.limit_value < 0.1);
  }
}

TEST_CASE("raw CDF starts at zero when the grid straddles the origin", "[deconv]")
{
  const auto xs = uniform_grid(-1.0, 1.0, 8); // 0 is not a knot
  std::vector<double> ys(xs.size(), 0.5);
  const auto c = raw_cdf(GridFunction(xs, ys));
  CHECK(c.front_x() == 0.0);
  CHECK(c.ys()[0] == 0.0);
  CHECK(c.back_y() == Approx(0.5));
}

TEST_CASE("default grid", "[deconv]")
{
  const std::vector<double> y{0.5, 1.0, 3.0, 4.0};
  const auto g = default_grid(y);
  CHECK(g.size() == 1024);
  CHECK(std::find(g.begin(), g.end(), 0.0) != g.end());
  CHECK(g.back() >= 4.0);
}

TEST_CASE("NoError estimate is consistent for W(0.75)", "[deconv]")
{
  Rng rng(34);
  const auto t = Target::weibull(0.75, 1.0);
  const auto y = t.sample(rng, 2000);
  const auto est = estimate(y, ErrorModel::none());
  double worst = 0.0;
  for (std::size_t i = 0; i < est.cdf_norm.size(); ++i) {
    const double x = est.cdf_norm.xs()[i];
    worst = std::max(worst, std::abs(est.cdf_norm.ys()[i] - t.cdf(x)));
  }
  CHECK(worst < 0.05);
}

TEST_CASE("bandwidth selection", "[deconv]")
{
  const auto y = normal_data(35, 100);
  const KernelSpec k;
  const auto em = ErrorModel::laplace(0.3);

  SECTION("the surrogate is finite on the whole search range")
  {
    const double v = reference_variance(y, em);
    const double s = std::sqrt(v);
    for (const auto& h : uniform_grid(kBandwidthGridLo * s, kBandwidthGridHi * s, 50))
      REQUIRE(std::isfinite(amise_surrogate(h, 100.0, em, k, v)));
  }
  SECTION("more data never gives a larger bandwidth")
  {
    std::vector<double> twice(y);
    twice.insert(twice.end(), y.begin(), y.end());
    for (const auto rule :
         {BandwidthRule::cdf_plug_in, BandwidthRule::plug_in, BandwidthRule::normal_reference}) {
      INFO(to_string(rule));
      CHECK(select_bandwidth(twice, em, k, std::nullopt, rule) <=
            select_bandwidth(y, em, k, std::nullopt, rule));
    }
  }
  SECTION("noise-free standard data is close to the reference rule")
  {
    // The kernel is of order six, so Silverman's rule is only a rough guide.
    // Without error the CDF risk is nearly flat in h and has no interior
    // minimum, so only the density rules are compared.
    const double silverman = 1.06 * std::sqrt(sample_variance(y)) * std::pow(100.0, -0.2);
    for (const auto rule : {BandwidthRule::plug_in, BandwidthRule::normal_reference}) {
      INFO(to_string(rule));
      const double h = select_bandwidth(y, ErrorModel::none(), k, std::nullopt, rule);
      CHECK(h > silverman / 3.0);
      CHECK(h < silverman * 3.0);
    }
  }
  SECTION("a smaller effective size gives a larger bandwidth")
  {
    CHECK(select_bandwidth(y, em, k, 30.0) >= select_bandwidth(y, em, k));
  }
  SECTION("bad input")
  {
    CHECK_THROWS_AS(select_bandwidth(std::vector<double>(5, 1.0), em, k), ArgumentError);
    CHECK_THROWS_AS(select_bandwidth(std::vector<double>(20, 1.0), em, k), ArgumentError);
    CHECK_THROWS_AS(parse_bandwidth_rule("silverman"), ArgumentError);
  }
}

TEST_CASE("rule names round-trip", "[deconv]")
{
  for (const auto rule :
       {BandwidthRule::cdf_plug_in, BandwidthRule::plug_in, BandwidthRule::normal_reference})
    CHECK(parse_bandwidth_rule(to_string(rule)) == rule);
}

TEST_CASE("estimate honours a fixed bandwidth", "[deconv]")
{
  const auto y = noisy_sample(Target::weibull(1.6, 1.0), ErrorModel::laplace(0.05), 36, 200);
  DeconvOptions o;
  o.bandwidth = 0.3;
  const auto est = estimate(y, ErrorModel::laplace(0.05), o);
  CHECK(est.bandwidth == 0.3);
  CHECK(est.n == 200);
  CHECK(est.density.size() == 1024);
}

// Properties

TEST_CASE("density estimate is invariant under shuffling", "[deconv][property]")
{
  auto y = noisy_sample(Target::weibull(0.75, 1.0), ErrorModel::laplace(0.1), 37, 200);
  const auto em = ErrorModel::laplace(0.1);
  const auto grid = default_grid(y);
  const auto d0 = estimate_density(y, em, KernelSpec(), 0.2, grid);
  Rng rng(38);
  for (int rep = 0; rep < 5; ++rep) {
    std::shuffle(y.begin(), y.end(), rng);
    const auto d1 = estimate_density(y, em, KernelSpec(), 0.2, grid);
    REQUIRE(max_abs_diff(d0.ys(), d1.ys()) < 1e-12);
  }
}

TEST_CASE("density estimate reflects with the data", "[deconv][property]")
{
  const auto y = noisy_sample(Target::beta(0.5, 0.75), ErrorModel::laplace(0.05), 39, 150);
  const double c = 0.4;
  std::vector<double> r(y.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    r[i] = 2.0 * c - y[i];
  const auto grid = uniform_grid(-2.0, 2.8, 241); // symmetric about c
  std::vector<double> mirrored(grid.rbegin(), grid.rend());
  for (auto& x : mirrored)
    x = 2.0 * c - x;
  const auto em = ErrorModel::lap_sg_mixture(0.01, 0.24, 0.25, 0.03);
  const auto d = estimate_density(y, em, KernelSpec(), 0.1, grid);
  const auto dr = estimate_density(r, em, KernelSpec(), 0.1, grid);
  double worst = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j)
    worst = std::max(worst, std::abs(d.ys()[j] - dr(2.0 * c - grid[j])));
  CHECK(worst < 1e-9);
}

TEST_CASE("normalized CDF is the raw CDF rescaled", "[deconv][property]")
{
  for (std::uint64_t seed = 40; seed < 50; ++seed) {
    const auto em = ErrorModel::laplace(0.1);
    const auto y = noisy_sample(Target::exp_uniform_mix(0.5, 1.0), em, seed, 300);
    const auto est = estimate(y, em);
    REQUIRE(est.cdf_raw.front_x() == 0.0);
    REQUIRE(est.cdf_raw.ys()[0] == 0.0);
    REQUIRE(est.cdf_norm.back_y() == Approx(1.0).epsilon(1e-14));
    for (std::size_t i = 1; i < est.cdf_raw.size(); ++i) {
      const double raw = est.cdf_raw.ys()[i];
      if (std::abs(raw) < 1e-3)
        continue;
      REQUIRE(std::abs(est.cdf_norm.ys()[i] / raw - 1.0 / est.limit_value) <=
              1e-12 / est.limit_value);
    }
  }
}

TEST_CASE("doubling the frequency nodes barely moves the estimate", "[deconv][property]")
{
  const std::vector<std::pair<Target, double>> cases{
    {Target::weibull(0.75, 1.0), 0.1},
    {Target::exp_uniform_mix(0.5, 1.0), 0.1},
    {parse_target("mixture(0.2, weibull(3, 1), 0.8, beta(0.5, 0.75))"), 0.5},
  };
  std::uint64_t seed = 51;
  for (const auto& [t, nsr] : cases) {
    const auto em = calibrate_nsr(default_mixture_template(), t, nsr);
    const auto y = noisy_sample(t, em, seed++, 500);
    const double h = select_bandwidth(y, em, KernelSpec());
    const auto grid = default_grid(y);
    const auto d1 = estimate_density(y, em, KernelSpec(), h, grid, 512);
    const auto d2 = estimate_density(y, em, KernelSpec(), h, grid, 1024);
    INFO(t.describe() << " h = " << h);
    CHECK(max_abs_diff(d1.ys(), d2.ys()) < 1e-4);
  }
}

TEST_CASE("NoError estimate matches the kernel sum on random samples", "[deconv][property]")
{
  Rng rng(60);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::uniform_int_distribution<int> n_of(2, 50);
  for (int rep = 0; rep < 6; ++rep) {
    const auto y = normal_data(61 + rep, static_cast<std::size_t>(n_of(rng)), 1.0, 2.0);
    const double h = u(rng);
    const auto grid = uniform_grid(-6.0, 8.0, 71);
    const auto d = estimate_density(y, ErrorModel::none(), KernelSpec(), h, grid);
    INFO("n = " << y.size() << " h = " << h);
    REQUIRE(max_abs_diff(d.ys(), oracle::kernel_sum(y, grid, h)) < 1e-6);
  }
}
