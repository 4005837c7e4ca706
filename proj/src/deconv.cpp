#include "lcmdeconv/deconv.hpp"

#include "lcmdeconv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace lcmdeconv {

namespace {

constexpr double kCharFnFloor = 1e-12;
constexpr double kNormalizerFloor = 0.1;
// Phases are recomputed exactly every this many recurrence steps.
constexpr std::size_t kReanchor = 128;

bool is_uniform(std::span<const double> xs)
{
  if (xs.size() < 3)
    return true;
  const double dx = (xs.back() - xs.front()) / static_cast<double>(xs.size() - 1);
  const double tol = 1e-10 * (xs.back() - xs.front());
  for (std::size_t j = 0; j < xs.size(); ++j)
    if (std::abs(xs[j] - (xs.front() + dx * static_cast<double>(j))) > tol)
      return false;
  return true;
}

double ipow(double x, int e)
{
  double r = 1.0;
  while (e > 0) {
    if (e & 1)
      r *= x;
    x *= x;
    e >>= 1;
  }
  return r;
}

} // namespace

KernelSpec::KernelSpec(int r, int s)
  : r_(r)
  , s_(s)
{
  if (r < 2 || r % 2 != 0)
    throw ArgumentError("kernel r must be an even integer >= 2");
  if (s < 1)
    throw ArgumentError("kernel s must be an integer >= 1");
}

double KernelSpec::fourier(double t) const
{
  const double a = std::abs(t);
  if (a > 1.0)
    return 0.0;
  return ipow(1.0 - ipow(a, r_), s_);
}

std::complex<double> empirical_char(std::span<const double> data, double t)
{
  if (data.empty())
    throw ArgumentError("empirical_char: no observations");
  double re = 0.0;
  double im = 0.0;
  for (double y : data) {
    re += std::cos(t * y);
    im += std::sin(t * y);
  }
  const auto n = static_cast<double>(data.size());
  return {re / n, im / n};
}

std::vector<std::complex<double>> empirical_char(std::span<const double> data,
                                                 const FreqGrid& freq)
{
  if (data.empty())
    throw ArgumentError("empirical_char: no observations");
  const std::size_t n = data.size();
  const double dt = freq.spacing();
  // Per-observation phase exp(i t_k y) and step exp(i dt y).
  std::vector<double> cr(n), ci(n), sr(n), si(n);
  for (std::size_t i = 0; i < n; ++i) {
    sr[i] = std::cos(dt * data[i]);
    si[i] = std::sin(dt * data[i]);
  }
  std::vector<std::complex<double>> out(freq.n_nodes);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < freq.n_nodes; ++k) {
    if (k % kReanchor == 0) {
      const double t = freq.node(k);
      for (std::size_t i = 0; i < n; ++i) {
        cr[i] = std::cos(t * data[i]);
        ci[i] = std::sin(t * data[i]);
      }
    }
    double re[4] = {0.0, 0.0, 0.0, 0.0};
    double im[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
      for (std::size_t l = 0; l < 4; ++l) {
        re[l] += cr[i + l];
        im[l] += ci[i + l];
      }
    for (; i < n; ++i) {
      re[0] += cr[i];
      im[0] += ci[i];
    }
    out[k] = {((re[0] + re[1]) + (re[2] + re[3])) * inv_n,
              ((im[0] + im[1]) + (im[2] + im[3])) * inv_n};
    for (std::size_t j = 0; j < n; ++j) {
      const double a = cr[j] * sr[j] - ci[j] * si[j];
      const double b = cr[j] * si[j] + ci[j] * sr[j];
      cr[j] = a;
      ci[j] = b;
    }
  }
  return out;
}

GridFunction estimate_density(std::span<const double> data,
                              const ErrorModel& em,
                              const KernelSpec& kernel,
                              double h,
                              std::span<const double> grid,
                              std::size_t freq_nodes)
{
  if (data.empty())
    throw ArgumentError("estimate_density: no observations");
  if (!(h > 0.0) || !std::isfinite(h))
    throw ArgumentError("estimate_density: bandwidth must be positive");
  if (grid.size() < 2)
    throw ArgumentError("estimate_density: grid needs at least two points");

  const FreqGrid freq(1.0 / h, freq_nodes);
  const auto phi_n = empirical_char(data, freq);
  const auto w = freq.weights();

  // First Euler-Maclaurin term. The integrand's t-derivative vanishes at 0
  // (FK'(0) = 0, symmetric noise) and at 1/h only the FK' term survives
  // because FK(1) = 0, so the correction sits on the last node alone.
  const double dt = freq.spacing();
  const double fk_slope_at_one = kernel.s() == 1 ? -static_cast<double>(kernel.r()) : 0.0;
  const double end_correction = -dt * dt / 12.0 * h * fk_slope_at_one;

  // psi_k = w_k FK(t_k h) phi_n(t_k) / (pi phi_eps(t_k)), end-corrected
  const std::size_t nk = freq.n_nodes;
  std::vector<double> pr(nk), pi(nk);
  for (std::size_t k = 0; k < nk; ++k) {
    const double t = freq.node(k);
    const double pe = em.char_fn_real(t);
    if (!(std::abs(pe) >= kCharFnFloor))
      throw IllPosedError("error characteristic function vanishes near t = " + std::to_string(t) +
                          " (bandwidth " + std::to_string(h) + " too small)");
    double c = w[k] * kernel.fourier(t * h) / (std::numbers::pi * pe);
    if (k + 1 == nk)
      c += end_correction / (std::numbers::pi * pe);
    pr[k] = c * phi_n[k].real();
    pi[k] = c * phi_n[k].imag();
  }

  std::vector<double> ys(grid.size());
  // Re[exp(-itx) psi] = cos(tx) psi_r + sin(tx) psi_i.
  const auto direct = [&](double x) {
    double acc = 0.0;
    for (std::size_t k = 0; k < nk; ++k) {
      const double t = freq.node(k);
      acc += std::cos(t * x) * pr[k] + std::sin(t * x) * pi[k];
    }
    return acc;
  };

  if (!is_uniform(grid)) {
    for (std::size_t j = 0; j < grid.size(); ++j)
      ys[j] = direct(grid[j]);
  } else {
    const double dx = (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);
    // c + i s = exp(i t_k x); step exp(i t_k dx).
    std::vector<double> cr(nk), ci(nk), sr(nk), si(nk);
    for (std::size_t k = 0; k < nk; ++k) {
      const double t = freq.node(k);
      sr[k] = std::cos(t * dx);
      si[k] = std::sin(t * dx);
    }
    for (std::size_t j = 0; j < grid.size(); ++j) {
      if (j % kReanchor == 0) {
        for (std::size_t k = 0; k < nk; ++k) {
          const double t = freq.node(k);
          cr[k] = std::cos(t * grid[j]);
          ci[k] = std::sin(t * grid[j]);
        }
      }
      double acc[4] = {0.0, 0.0, 0.0, 0.0};
      std::size_t k = 0;
      for (; k + 4 <= nk; k += 4)
        for (std::size_t l = 0; l < 4; ++l)
          acc[l] += cr[k + l] * pr[k + l] + ci[k + l] * pi[k + l];
      for (; k < nk; ++k)
        acc[0] += cr[k] * pr[k] + ci[k] * pi[k];
      ys[j] = (acc[0] + acc[1]) + (acc[2] + acc[3]);
      for (std::size_t q = 0; q < nk; ++q) {
        const double a = cr[q] * sr[q] - ci[q] * si[q];
        const double b = cr[q] * si[q] + ci[q] * sr[q];
        cr[q] = a;
        ci[q] = b;
      }
    }
  }
  return GridFunction({grid.begin(), grid.end()}, std::move(ys));
}

GridFunction raw_cdf(const GridFunction& density)
{
  const auto xs = density.xs();
  const auto ys = density.ys();
  if (xs.front() > 0.0)
    throw ArgumentError("raw_cdf: density grid must reach down to 0");
  const auto first = std::lower_bound(xs.begin(), xs.end(), 0.0);
  const auto start = static_cast<std::size_t>(first - xs.begin());
  std::vector<double> px;
  std::vector<double> py;
  px.reserve(xs.size() - start + 1);
  py.reserve(xs.size() - start + 1);
  if (start == xs.size() || xs[start] != 0.0) {
    px.push_back(0.0);
    py.push_back(density(0.0));
  }
  px.insert(px.end(), xs.begin() + static_cast<std::ptrdiff_t>(start), xs.end());
  py.insert(py.end(), ys.begin() + static_cast<std::ptrdiff_t>(start), ys.end());
  if (px.size() < 2)
    throw ArgumentError("raw_cdf: density grid has no positive part");
  return cum_trapezoid(GridFunction(std::move(px), std::move(py)));
}

CdfEstimate estimate_cdf(const GridFunction& density)
{
  GridFunction raw = raw_cdf(density);
  const double limit = raw.back_y();
  if (!(limit > kNormalizerFloor))
    throw DegenerateNormalizerError("CDF estimate ends at " + std::to_string(limit) +
                                      "; cannot normalize (bandwidth too small or noise too large)",
                                    limit);
  std::vector<double> norm(raw.ys().begin(), raw.ys().end());
  for (auto& v : norm)
    v /= limit;
  GridFunction normalized({raw.xs().begin(), raw.xs().end()}, std::move(norm));
  return {std::move(raw), std::move(normalized), limit};
}

std::vector<double> default_grid(std::span<const double> data, std::size_t points, double pad_sd)
{
  if (data.empty())
    throw ArgumentError("default_grid: no observations");
  const auto [mn, mx] = std::minmax_element(data.begin(), data.end());
  const double s = data.size() > 1 ? std::sqrt(sample_variance(data)) : 0.0;
  const double lo = std::min(0.0, *mn - pad_sd * s);
  const double hi = *mx + pad_sd * s;
  if (!(hi > 0.0))
    throw ArgumentError("default_grid: observations lie entirely below zero");
  return uniform_grid_through_zero(lo, hi, points);
}

std::string to_string(BandwidthRule r)
{
  switch (r) {
    case BandwidthRule::cdf_plug_in:
      return "cdf_plug_in";
    case BandwidthRule::plug_in:
      return "plug_in";
    case BandwidthRule::normal_reference:
      return "normal_reference";
  }
  return "?";
}

BandwidthRule parse_bandwidth_rule(std::string_view s)
{
  if (s == "cdf_plug_in")
    return BandwidthRule::cdf_plug_in;
  if (s == "plug_in")
    return BandwidthRule::plug_in;
  if (s == "normal_reference")
    return BandwidthRule::normal_reference;
  throw ArgumentError("unknown bandwidth rule '" + std::string(s) +
                      "' (expected cdf_plug_in, plug_in or normal_reference)");
}

double amise_surrogate(double h,
                       double n_eff,
                       const ErrorModel& em,
                       const KernelSpec& kernel,
                       double ref_variance)
{
  constexpr std::size_t nodes = 257;
  const double du = 1.0 / static_cast<double>(nodes - 1);
  const double sigma = std::sqrt(ref_variance);
  double var_int = 0.0;
  double bias_int = 0.0;
  for (std::size_t k = 0; k < nodes; ++k) {
    const double u = du * static_cast<double>(k);
    const double wt = (k == 0 || k + 1 == nodes) ? 0.5 * du : du;
    const double t = u / h;
    const double fk = kernel.fourier(u);
    const double pe = em.char_fn_real(t);
    var_int += wt * fk * fk / (pe * pe);
    const double miss = 1.0 - fk;
    bias_int += wt * miss * miss * std::exp(-ref_variance * t * t);
  }
  // Substitution t = u / h.
  var_int /= h;
  bias_int /= h;
  // Beyond the cutoff the kernel passes nothing: int_{1/h}^inf exp(-s^2 t^2) dt.
  bias_int += 0.5 * std::sqrt(std::numbers::pi) / sigma * std::erfc(sigma / h);
  return (var_int / n_eff + bias_int) / std::numbers::pi;
}

double reference_variance(std::span<const double> data, const ErrorModel& em)
{
  const double s2 = sample_variance(data);
  return std::max(s2 - em.variance(), 0.05 * s2);
}

namespace {

// Variance integral int_0^{1/h} FK(th)^2 / phi_eps(t)^2 dt.
double variance_integral(double h, const ErrorModel& em, const KernelSpec& kernel)
{
  constexpr std::size_t nodes = 257;
  const double du = 1.0 / static_cast<double>(nodes - 1);
  double acc = 0.0;
  for (std::size_t k = 0; k < nodes; ++k) {
    const double u = du * static_cast<double>(k);
    const double wt = (k == 0 || k + 1 == nodes) ? 0.5 * du : du;
    const double fk = kernel.fourier(u);
    const double pe = em.char_fn_real(u / h);
    acc += wt * fk * fk / (pe * pe);
  }
  return acc / h;
}

} // namespace

SpectralPilot spectral_pilot(std::span<const double> data, const ErrorModel& em)
{
  if (data.size() < 2)
    throw ArgumentError("spectral_pilot: need at least 2 observations");
  const auto [mn, mx] = std::minmax_element(data.begin(), data.end());
  const double range = *mx - *mn;
  const double ref_var = reference_variance(data, em);
  if (!(range > 0.0) || !(ref_var > 0.0))
    throw ArgumentError("spectral_pilot: observations have zero spread");
  // Cover every frequency the bandwidth search can reach, resolving the
  // oscillation of |phi_n|^2 (period about 2 pi / range).
  constexpr std::size_t kMaxNodes = 16384;
  const double t_top = 1.0 / (kBandwidthGridLo * std::sqrt(ref_var));
  const auto wanted = static_cast<std::size_t>(std::ceil(t_top * range)) + 1;
  const std::size_t nodes = std::clamp<std::size_t>(wanted, 64, kMaxNodes);
  FreqGrid grid(t_top, nodes);
  const auto phi = empirical_char(data, grid);

  const auto n = static_cast<double>(data.size());
  const double floor = kPilotThreshold / n;
  std::vector<double> power(nodes, 0.0);
  std::vector<double> y_power(nodes, 0.0);
  double cutoff = t_top;
  for (std::size_t k = 0; k < nodes; ++k) {
    const double p = std::norm(phi[k]);
    if (p < floor) {
      cutoff = grid.node(k);
      break;
    }
    const double pe = em.char_fn_real(grid.node(k));
    y_power[k] = std::max(p - 1.0 / n, 0.0);
    power[k] = y_power[k] / (pe * pe);
  }
  return {grid, std::move(power), std::move(y_power), cutoff, sample_variance(data)};
}

double plug_in_mise(double h,
                    double n_eff,
                    const ErrorModel& em,
                    const KernelSpec& kernel,
                    const SpectralPilot& pilot)
{
  const double dt = pilot.grid.spacing();
  double bias = 0.0;
  for (std::size_t k = 0; k < pilot.power.size(); ++k) {
    const double p = pilot.power[k];
    if (p == 0.0)
      continue;
    const double wt = (k == 0 || k + 1 == pilot.power.size()) ? 0.5 * dt : dt;
    const double miss = 1.0 - kernel.fourier(pilot.grid.node(k) * h);
    bias += wt * miss * miss * p;
  }
  return (variance_integral(h, em, kernel) / n_eff + bias) / std::numbers::pi;
}

double cdf_plug_in_mise(double h,
                        double n_eff,
                        const ErrorModel& em,
                        const KernelSpec& kernel,
                        const SpectralPilot& pilot)
{
  const double dt = pilot.grid.spacing();
  double bias = 0.0;
  for (std::size_t k = 1; k < pilot.power.size(); ++k) {
    const double p = pilot.power[k];
    if (p == 0.0)
      continue;
    const double t = pilot.grid.node(k);
    const double wt = k + 1 == pilot.power.size() ? 0.5 * dt : dt;
    const double miss = 1.0 - kernel.fourier(t * h);
    bias += wt * miss * miss * p / (t * t);
  }

  constexpr std::size_t nodes = 257;
  const double du = 1.0 / static_cast<double>(nodes - 1);
  const auto& yp = pilot.y_power;
  double var = 0.0;
  for (std::size_t k = 0; k < nodes; ++k) {
    const double u = du * static_cast<double>(k);
    const double wt = (k == 0 || k + 1 == nodes) ? 0.5 * du : du;
    const double fk = kernel.fourier(u);
    if (fk == 0.0)
      continue;
    const double t = u / h;
    double integrand = pilot.y_variance;
    if (k > 0) {
      // Linear interpolation of |phi_Y|^2 on the pilot grid.
      const double pos = t / dt;
      const auto j = static_cast<std::size_t>(pos);
      double py = 0.0;
      if (j + 1 < yp.size())
        py = yp[j] + (pos - static_cast<double>(j)) * (yp[j + 1] - yp[j]);
      const double pe = em.char_fn_real(t);
      integrand = (1.0 - std::min(py, 1.0)) / (t * t * pe * pe);
    }
    var += wt * fk * fk * integrand;
  }
  var /= h;
  return (var / n_eff + bias) / std::numbers::pi;
}

double select_bandwidth(std::span<const double> data,
                        const ErrorModel& em,
                        const KernelSpec& kernel,
                        std::optional<double> effective_n,
                        BandwidthRule rule)
{
  if (data.size() < 10)
    throw ArgumentError("select_bandwidth: need at least 10 observations");
  const double n_eff = effective_n.value_or(static_cast<double>(data.size()));
  if (!(n_eff >= 1.0))
    throw ArgumentError("select_bandwidth: effective sample size must be >= 1");
  const double ref_var = reference_variance(data, em);
  if (!(ref_var > 0.0))
    throw ArgumentError("select_bandwidth: observations have zero spread");
  std::optional<SpectralPilot> pilot;
  if (rule != BandwidthRule::normal_reference)
    pilot = spectral_pilot(data, em);
  const double sigma = std::sqrt(ref_var);
  const double lo = std::log(kBandwidthGridLo * sigma);
  const double hi = std::log(kBandwidthGridHi * sigma);
  double best_h = 0.0;
  double best_a = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < kBandwidthGridSize; ++i) {
    const double h = std::exp(lo + (hi - lo) * static_cast<double>(i) /
                                     static_cast<double>(kBandwidthGridSize - 1));
    double a = 0.0;
    switch (rule) {
      case BandwidthRule::plug_in:
        a = plug_in_mise(h, n_eff, em, kernel, *pilot);
        break;
      case BandwidthRule::cdf_plug_in:
        a = cdf_plug_in_mise(h, n_eff, em, kernel, *pilot);
        break;
      case BandwidthRule::normal_reference:
        a = amise_surrogate(h, n_eff, em, kernel, ref_var);
        break;
    }
    if (a < best_a) {
      best_a = a;
      best_h = h;
    }
  }
  return best_h;
}

DeconvEstimate estimate(std::span<const double> data,
                        const ErrorModel& em,
                        const DeconvOptions& options)
{
  if (data.empty())
    throw ArgumentError("estimate: no observations");
  const double h = options.bandwidth ? *options.bandwidth
                                     : select_bandwidth(data, em, options.kernel, std::nullopt,
                                                        options.bandwidth_rule);
  const auto grid = default_grid(data, options.grid_points, options.grid_pad_sd);
  GridFunction density =
    estimate_density(data, em, options.kernel, h, grid, options.freq_nodes);
  CdfEstimate cdf = estimate_cdf(density);
  return DeconvEstimate{std::move(density), std::move(cdf.cdf_raw), std::move(cdf.cdf_norm),
                        cdf.limit_value, h, data.size()};
}

} // namespace lcmdeconv
