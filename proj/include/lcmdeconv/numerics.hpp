#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lcmdeconv {

//! A real function sampled on a strictly increasing grid.
//!
//! Between knots the function is the linear interpolant; outside
//! [front_x(), back_x()] it is clamped to the boundary value. Immutable once
//! built.
class GridFunction
{
public:
  GridFunction(std::vector<double> xs, std::vector<double> ys);

  std::span<const double> xs() const { return xs_; }
  std::span<const double> ys() const { return ys_; }
  std::size_t size() const { return xs_.size(); }
  double front_x() const { return xs_.front(); }
  double back_x() const { return xs_.back(); }
  double back_y() const { return ys_.back(); }

  double operator()(double x) const;

  bool same_grid(const GridFunction& other) const { return xs_ == other.xs_; }

private:
  std::vector<double> xs_;
  std::vector<double> ys_;
};

// Frequency quadrature grid on [0, t_max], t_max = 1/h.
struct FreqGrid
{
  FreqGrid(double t_max, std::size_t n_nodes);

  double t_max;
  std::size_t n_nodes;

  double spacing() const { return t_max / static_cast<double>(n_nodes - 1); }
  double node(std::size_t k) const { return spacing() * static_cast<double>(k); }
  // Composite trapezoid weights.
  std::vector<double> weights() const;
};

double eval(const GridFunction& g, double x);

//! Running integral of the piecewise-linear interpolant of g, starting at
//! zero at the first knot.
GridFunction cum_trapezoid(const GridFunction& g);

//! The ceil(level * N)-th smallest value (1-based), no interpolation.
double empirical_quantile(std::span<const double> values, double level);

//! max_k |g1(x_k) - g2(x_k)| over a shared grid.
double sup_distance(const GridFunction& g1, const GridFunction& g2);

std::vector<double> uniform_grid(double lo, double hi, std::size_t n);

//! Uniform grid with n points covering [lo, hi] that contains 0 as an exact
//! knot whenever lo < 0 < hi. Used for density grids so that the CDF can be
//! integrated from the origin without interpolation.
std::vector<double> uniform_grid_through_zero(double lo, double hi, std::size_t n);

double mean(std::span<const double> values);
//! Sample variance with denominator N - 1.
double sample_variance(std::span<const double> values);

} // namespace lcmdeconv
