#pragma once

#include "lcmdeconv/distributions.hpp"
#include "lcmdeconv/numerics.hpp"

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lcmdeconv {

//! Band-limited deconvolution kernel with Fourier transform
//! (1 - t^r)^s on [-1, 1], zero outside. r even >= 2, s >= 1.
//! The default r = 6, s = 1 has vanishing moments up to order 5.
class KernelSpec
{
public:
  KernelSpec()
    : KernelSpec(6, 1)
  {}
  KernelSpec(int r, int s);

  int r() const { return r_; }
  int s() const { return s_; }

  double fourier(double t) const;

private:
  int r_;
  int s_;
};

enum class BandwidthRule
{
  // Integrated squared error of the CDF estimate, bias term read off the
  // data's empirical characteristic function (see spectral_pilot).
  cdf_plug_in,
  // Same pilot, MISE of the density estimate.
  plug_in,
  // Density MISE with a normal reference density for the bias term.
  normal_reference,
};

std::string to_string(BandwidthRule r);
BandwidthRule parse_bandwidth_rule(std::string_view s);

struct DeconvOptions
{
  KernelSpec kernel;
  std::size_t grid_points = 1024;
  std::size_t freq_nodes = 512;
  // Spatial grid covers [min(0, min Y - pad*S), max Y + pad*S].
  double grid_pad_sd = 2.0;
  BandwidthRule bandwidth_rule = BandwidthRule::cdf_plug_in;
  // Skip the selector when set.
  std::optional<double> bandwidth;
};

struct CdfEstimate
{
  GridFunction cdf_raw;  // integral of the density from 0
  GridFunction cdf_norm; // cdf_raw / limit_value
  double limit_value;    // cdf_raw at the right end of the grid
};

struct DeconvEstimate
{
  GridFunction density;
  GridFunction cdf_raw;
  GridFunction cdf_norm;
  double limit_value;
  double bandwidth;
  std::size_t n;
};

std::complex<double> empirical_char(std::span<const double> data, double t);

//! Empirical characteristic function on every node of `freq`. Uses a phase
//! recurrence re-anchored every few nodes; agrees with the pointwise version
//! to ~1e-13.
std::vector<std::complex<double>> empirical_char(std::span<const double> data,
                                                 const FreqGrid& freq);

//! Deconvolution density estimate
//!   f(x) = (1/pi) int_0^{1/h} Re[exp(-itx) FK(th) phi_n(t) / phi_eps(t)] dt
//! by trapezoid quadrature on `freq_nodes` nodes with the first
//! Euler-Maclaurin end correction, evaluated on `grid`.
//! Throws IllPosedError if |phi_eps| < 1e-12 on [0, 1/h].
GridFunction estimate_density(std::span<const double> data,
                              const ErrorModel& em,
                              const KernelSpec& kernel,
                              double h,
                              std::span<const double> grid,
                              std::size_t freq_nodes = 512);

//! Integral of the density from 0 over the non-negative part of its grid.
//! No normalization and no checks on the end value.
GridFunction raw_cdf(const GridFunction& density);

//! raw_cdf plus normalization. Throws DegenerateNormalizerError when the
//! limit value is <= 0.1.
CdfEstimate estimate_cdf(const GridFunction& density);

std::vector<double> default_grid(std::span<const double> data,
                                 std::size_t points = 1024,
                                 double pad_sd = 2.0);

//! Normal-reference AMISE surrogate for the density estimate at bandwidth h:
//!   (1/(2 pi n)) int_{|t|<1/h} FK(th)^2 / phi_eps(t)^2 dt
//!   + (1/(2 pi)) int |1 - FK(th)|^2 exp(-ref_variance t^2) dt.
double amise_surrogate(double h,
                       double n_eff,
                       const ErrorModel& em,
                       const KernelSpec& kernel,
                       double ref_variance);

//! Reference variance max(S_Y^2 - Var(eps), 0.05 S_Y^2).
double reference_variance(std::span<const double> data, const ErrorModel& em);

//! Estimate of |phi_X(t)|^2 on a uniform frequency grid:
//!   (|phi_n(t)|^2 - 1/n)_+ / phi_eps(t)^2  for t below the cutoff,
//! zero from the cutoff on. The cutoff is the first frequency where
//! |phi_n|^2 drops below kPilotThreshold / n, beyond which the empirical
//! characteristic function is indistinguishable from sampling noise.
struct SpectralPilot
{
  FreqGrid grid;
  std::vector<double> power;
  // (|phi_n|^2 - 1/n)_+ below the cutoff, zero from it on.
  std::vector<double> y_power;
  double cutoff;
  double y_variance;
};

inline constexpr double kPilotThreshold = 3.0;

SpectralPilot spectral_pilot(std::span<const double> data, const ErrorModel& em);

//! MISE estimate at bandwidth h:
//!   (1/(pi n)) int_0^{1/h} FK(th)^2 / phi_eps(t)^2 dt
//!   + (1/pi) int_0^inf |1 - FK(th)|^2 |phi_X(t)|^2 dt
//! with |phi_X|^2 taken from the pilot.
double plug_in_mise(double h,
                    double n_eff,
                    const ErrorModel& em,
                    const KernelSpec& kernel,
                    const SpectralPilot& pilot);

//! Integrated squared error of the CDF estimate at bandwidth h:
//!   (1/(pi n)) int_0^{1/h} FK(th)^2 (1 - |phi_Y(t)|^2) / (t^2 phi_eps(t)^2) dt
//!   + (1/pi) int_0^inf |1 - FK(th)|^2 |phi_X(t)|^2 / t^2 dt.
double cdf_plug_in_mise(double h,
                        double n_eff,
                        const ErrorModel& em,
                        const KernelSpec& kernel,
                        const SpectralPilot& pilot);

//! Log-grid minimizer of the MISE estimate chosen by `rule`. `effective_n`
//! replaces the sample size in the variance term (bootstrap subsamples).
double select_bandwidth(std::span<const double> data,
                        const ErrorModel& em,
                        const KernelSpec& kernel,
                        std::optional<double> effective_n = std::nullopt,
                        BandwidthRule rule = BandwidthRule::cdf_plug_in);

//! Bandwidth search range used by select_bandwidth, as multiples of the
//! reference standard deviation.
inline constexpr double kBandwidthGridLo = 0.01;
inline constexpr double kBandwidthGridHi = 4.0;
inline constexpr std::size_t kBandwidthGridSize = 241;

//! Full pipeline: bandwidth, default grid, density, raw and normalized CDF.
DeconvEstimate estimate(std::span<const double> data,
                        const ErrorModel& em,
                        const DeconvOptions& options = {});

} // namespace lcmdeconv
