#include "lcmdeconv/lcm.hpp"

#include "lcmdeconv/errors.hpp"

#include <algorithm>
#include <cmath>

namespace lcmdeconv {

ConcaveEnvelope::ConcaveEnvelope(std::vector<double> knot_x,
                                 std::vector<double> knot_y,
                                 double plateau_start)
  : knot_x_(std::move(knot_x))
  , knot_y_(std::move(knot_y))
  , plateau_start_(plateau_start)
{
  if (knot_x_.size() != knot_y_.size() || knot_x_.empty())
    throw ArgumentError("ConcaveEnvelope: knot lists must be non-empty and of equal length");
  slopes_.reserve(knot_x_.size());
  for (std::size_t i = 0; i + 1 < knot_x_.size(); ++i)
    slopes_.push_back((knot_y_[i + 1] - knot_y_[i]) / (knot_x_[i + 1] - knot_x_[i]));
}

double ConcaveEnvelope::operator()(double x) const
{
  if (x <= knot_x_.front())
    return knot_y_.front();
  if (x >= knot_x_.back())
    return knot_y_.back();
  const auto it = std::upper_bound(knot_x_.begin(), knot_x_.end(), x);
  const auto j = static_cast<std::size_t>(it - knot_x_.begin());
  const std::size_t i = j - 1;
  if (x == knot_x_[i])
    return knot_y_[i];
  return knot_y_[i] + (knot_y_[j] - knot_y_[i]) * ((x - knot_x_[i]) / (knot_x_[j] - knot_x_[i]));
}

double ConcaveEnvelope::slope(double x) const
{
  if (slopes_.empty() || x >= plateau_start_ || x >= knot_x_.back())
    return 0.0;
  if (x < knot_x_.front())
    return slopes_.front();
  const auto it = std::upper_bound(knot_x_.begin(), knot_x_.end(), x);
  const auto i = static_cast<std::size_t>(it - knot_x_.begin()) - 1;
  return slopes_[std::min(i, slopes_.size() - 1)];
}

std::vector<double> ConcaveEnvelope::values_on(std::span<const double> xs) const
{
  std::vector<double> out(xs.size());
  std::size_t seg = 0;
  const std::size_t last = knot_x_.size() - 1;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const double x = xs[j];
    if (x <= knot_x_.front()) {
      out[j] = knot_y_.front();
      continue;
    }
    if (x >= knot_x_.back()) {
      out[j] = knot_y_.back();
      continue;
    }
    while (seg < last && knot_x_[seg + 1] <= x)
      ++seg;
    if (x == knot_x_[seg]) {
      out[j] = knot_y_[seg];
      continue;
    }
    const double x0 = knot_x_[seg];
    const double x1 = knot_x_[seg + 1];
    out[j] = knot_y_[seg] + (knot_y_[seg + 1] - knot_y_[seg]) * ((x - x0) / (x1 - x0));
  }
  return out;
}

GridFunction ConcaveEnvelope::as_grid_function(std::span<const double> xs) const
{
  return GridFunction({xs.begin(), xs.end()}, values_on(xs));
}

ConcaveEnvelope lcm(const GridFunction& g)
{
  const auto xs = g.xs();
  const auto ys = g.ys();
  const auto top = static_cast<std::size_t>(std::max_element(ys.begin(), ys.end()) - ys.begin());

  std::vector<double> hx;
  std::vector<double> hy;
  hx.reserve(top + 2);
  hy.reserve(top + 2);
  for (std::size_t i = 0; i <= top; ++i) {
    while (hx.size() >= 2) {
      const std::size_t a = hx.size() - 1;
      const std::size_t o = a - 1;
      // Drop the middle point when it lies on or below the chord o -> i.
      const double cross =
        (hx[a] - hx[o]) * (ys[i] - hy[o]) - (hy[a] - hy[o]) * (xs[i] - hx[o]);
      if (cross < 0.0)
        break;
      hx.pop_back();
      hy.pop_back();
    }
    hx.push_back(xs[i]);
    hy.push_back(ys[i]);
  }
  const double plateau_start = xs[top];
  if (top + 1 < xs.size()) {
    hx.push_back(xs.back());
    hy.push_back(ys[top]);
  }
  return ConcaveEnvelope(std::move(hx), std::move(hy), plateau_start);
}

GridFunction lcm_on_grid(const GridFunction& g)
{
  return lcm(g).as_grid_function(g.xs());
}

double lcm_slope(const ConcaveEnvelope& env, double x)
{
  return env.slope(x);
}

ConcaveEnvelope cap_envelope(const ConcaveEnvelope& env, double level)
{
  const auto kx = env.knot_x();
  const auto ky = env.knot_y();
  if (env.max_value() < level)
    throw ArgumentError("cap_envelope: envelope never reaches the cap");
  std::vector<double> hx;
  std::vector<double> hy;
  std::size_t i = 0;
  for (; i < kx.size() && ky[i] < level; ++i) {
    hx.push_back(kx[i]);
    hy.push_back(ky[i]);
  }
  // ky[i] >= level; the cap is reached on segment (i-1, i) or at knot i.
  double x_hit = kx[i];
  if (i > 0 && ky[i] > level)
    x_hit = kx[i - 1] + (level - ky[i - 1]) * (kx[i] - kx[i - 1]) / (ky[i] - ky[i - 1]);
  if (!hx.empty() && x_hit <= hx.back()) {
    x_hit = hx.back();
    hy.back() = level;
  } else {
    hx.push_back(x_hit);
    hy.push_back(level);
  }
  if (x_hit < kx.back()) {
    hx.push_back(kx.back());
    hy.push_back(level);
  }
  return ConcaveEnvelope(std::move(hx), std::move(hy), x_hit);
}

MarshallBound marshall_check(const GridFunction& g1, const GridFunction& g2)
{
  if (!g1.same_grid(g2))
    throw ArgumentError("marshall_check: functions live on different grids");
  return {sup_distance(lcm_on_grid(g1), lcm_on_grid(g2)), sup_distance(g1, g2)};
}

} // namespace lcmdeconv
