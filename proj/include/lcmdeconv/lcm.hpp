#pragma once

#include "lcmdeconv/numerics.hpp"

#include <span>
#include <vector>

namespace lcmdeconv {

//! Least concave majorant on [0, inf) of a grid function that is treated as
//! constant beyond its last knot.
//!
//! Knots are a subsequence of the input points. Segment slopes are strictly
//! decreasing and non-negative; the last segment (from plateau_start on) is
//! flat at the input's maximum whenever the maximum is not at the last knot.
class ConcaveEnvelope
{
public:
  ConcaveEnvelope(std::vector<double> knot_x, std::vector<double> knot_y, double plateau_start);

  std::span<const double> knot_x() const { return knot_x_; }
  std::span<const double> knot_y() const { return knot_y_; }
  std::span<const double> slopes() const { return slopes_; }
  double plateau_start() const { return plateau_start_; }
  double max_value() const { return knot_y_.back(); }

  double operator()(double x) const;
  //! Right-hand slope; zero from plateau_start on.
  double slope(double x) const;
  //! Envelope values on a sorted abscissa list (exact at knots).
  std::vector<double> values_on(std::span<const double> xs) const;
  GridFunction as_grid_function(std::span<const double> xs) const;

private:
  std::vector<double> knot_x_;
  std::vector<double> knot_y_;
  std::vector<double> slopes_;
  double plateau_start_;
};

//! Upper hull of {(x_i, g_i)} by one monotone-chain scan up to the first
//! argmax, then flat at max g. Collinear interior points are dropped from the
//! knot list.
ConcaveEnvelope lcm(const GridFunction& g);

//! Envelope of g sampled back on g's own grid.
GridFunction lcm_on_grid(const GridFunction& g);

double lcm_slope(const ConcaveEnvelope& env, double x);

//! min(env, level), again a concave envelope. Requires env to reach `level`.
ConcaveEnvelope cap_envelope(const ConcaveEnvelope& env, double level);

struct MarshallBound
{
  double lhs; // sup |M g1 - M g2| on the grid
  double rhs; // sup |g1 - g2| on the grid
};

MarshallBound marshall_check(const GridFunction& g1, const GridFunction& g2);

} // namespace lcmdeconv
