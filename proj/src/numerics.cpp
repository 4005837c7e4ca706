#include "lcmdeconv/numerics.hpp"

#include "lcmdeconv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lcmdeconv {

GridFunction::GridFunction(std::vector<double> xs, std::vector<double> ys)
  : xs_(std::move(xs))
  , ys_(std::move(ys))
{
  if (xs_.size() != ys_.size())
    throw ArgumentError("GridFunction: xs and ys differ in length");
  if (xs_.size() < 2)
    throw ArgumentError("GridFunction: need at least two knots");
  for (std::size_t i = 0; i < xs_.size(); ++i) {
    if (!std::isfinite(xs_[i]) || !std::isfinite(ys_[i]))
      throw ArgumentError("GridFunction: non-finite value at knot " +
                          std::to_string(i));
    if (i > 0 && !(xs_[i] > xs_[i - 1]))
      throw ArgumentError("GridFunction: abscissae not strictly increasing at knot " +
                          std::to_string(i));
  }
}

double GridFunction::operator()(double x) const
{
  if (!std::isfinite(x))
    throw ArgumentError("GridFunction: evaluation at non-finite x");
  if (x <= xs_.front())
    return ys_.front();
  if (x >= xs_.back())
    return ys_.back();
  const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
  const auto j = static_cast<std::size_t>(it - xs_.begin());
  const std::size_t i = j - 1;
  const double w = (x - xs_[i]) / (xs_[j] - xs_[i]);
  return ys_[i] + w * (ys_[j] - ys_[i]);
}

FreqGrid::FreqGrid(double t_max_, std::size_t n_nodes_)
  : t_max(t_max_)
  , n_nodes(n_nodes_)
{
  if (!(t_max > 0.0) || !std::isfinite(t_max))
    throw ArgumentError("FreqGrid: t_max must be positive and finite");
  if (n_nodes < 16)
    throw ArgumentError("FreqGrid: need at least 16 nodes");
}

std::vector<double> FreqGrid::weights() const
{
  std::vector<double> w(n_nodes, spacing());
  w.front() *= 0.5;
  w.back() *= 0.5;
  return w;
}

double eval(const GridFunction& g, double x)
{
  return g(x);
}

GridFunction cum_trapezoid(const GridFunction& g)
{
  const auto xs = g.xs();
  const auto ys = g.ys();
  std::vector<double> acc(xs.size(), 0.0);
  for (std::size_t k = 1; k < xs.size(); ++k)
    acc[k] = acc[k - 1] + 0.5 * (xs[k] - xs[k - 1]) * (ys[k] + ys[k - 1]);
  return GridFunction({xs.begin(), xs.end()}, std::move(acc));
}

double empirical_quantile(std::span<const double> values, double level)
{
  if (values.empty())
    throw ArgumentError("empirical_quantile: no values");
  if (!(level > 0.0 && level < 1.0))
    throw ArgumentError("empirical_quantile: level must lie in (0, 1)");
  std::vector<double> sorted(values.begin(), values.end());
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(level * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                   sorted.end());
  return sorted[rank - 1];
}

double sup_distance(const GridFunction& g1, const GridFunction& g2)
{
  if (!g1.same_grid(g2))
    throw ArgumentError("sup_distance: functions live on different grids");
  const auto a = g1.ys();
  const auto b = g2.ys();
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

std::vector<double> uniform_grid(double lo, double hi, std::size_t n)
{
  if (n < 2 || !(hi > lo))
    throw ArgumentError("uniform_grid: need n >= 2 and hi > lo");
  std::vector<double> xs(n);
  const double dx = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i)
    xs[i] = lo + dx * static_cast<double>(i);
  xs.back() = hi;
  return xs;
}

std::vector<double> uniform_grid_through_zero(double lo, double hi, std::size_t n)
{
  if (!(lo < 0.0 && hi > 0.0))
    return uniform_grid(lo, hi, n);
  if (n < 3)
    throw ArgumentError("uniform_grid_through_zero: need n >= 3");
  // One spare cell so that shifting the origin onto a knot still covers
  // [lo, hi].
  const double dx = (hi - lo) / static_cast<double>(n - 2);
  const auto below = static_cast<long>(std::ceil(-lo / dx));
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i)
    xs[i] = static_cast<double>(static_cast<long>(i) - below) * dx;
  return xs;
}

double mean(std::span<const double> values)
{
  if (values.empty())
    throw ArgumentError("mean: no values");
  double s = 0.0;
  for (double v : values)
    s += v;
  return s / static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values)
{
  if (values.size() < 2)
    throw ArgumentError("sample_variance: need at least two values");
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values)
    ss += (v - m) * (v - m);
  return ss / static_cast<double>(values.size() - 1);
}

} // namespace lcmdeconv
