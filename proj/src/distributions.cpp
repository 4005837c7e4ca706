#include "lcmdeconv/distributions.hpp"

#include "lcmdeconv/errors.hpp"

#include <boost/math/distributions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace lcmdeconv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts...
{
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_positive(double v, const char* what)
{
  if (!(v > 0.0) || !std::isfinite(v))
    throw ArgumentError(std::string(what) + " must be positive and finite");
}

double uniform01(Rng& rng)
{
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

// Shortest text that reads back to the same double.
std::string fmt(double v)
{
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Root of cdf(x) = u bracketed by [lo, hi].
template <class Cdf>
double invert_cdf(const Cdf& cdf, double u, double lo, double hi)
{
  if (!(hi > lo))
    return lo;
  const auto f = [&](double x) { return cdf(x) - u; };
  const double flo = f(lo);
  const double fhi = f(hi);
  if (flo >= 0.0)
    return lo;
  if (fhi <= 0.0)
    return hi;
  std::uintmax_t max_iter = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(
    f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(52), max_iter);
  return 0.5 * (a + b);
}

boost::math::beta_distribution<double> as_boost(const Target::Beta& b)
{
  return boost::math::beta_distribution<double>(b.a, b.b);
}

double beta_pdf(const Target::Beta& b, double x)
{
  if (x < 0.0 || x > 1.0)
    return 0.0;
  if (x == 0.0)
    return b.a < 1.0 ? kInf : (b.a == 1.0 ? b.b : 0.0);
  if (x == 1.0)
    return b.b < 1.0 ? kInf : (b.b == 1.0 ? b.a : 0.0);
  return boost::math::pdf(as_boost(b), x);
}

double weibull_pdf(const Target::Weibull& w, double x)
{
  if (x < 0.0)
    return 0.0;
  if (x == 0.0)
    return w.shape < 1.0 ? kInf : (w.shape == 1.0 ? 1.0 / w.scale : 0.0);
  const double z = x / w.scale;
  return (w.shape / w.scale) * std::pow(z, w.shape - 1.0) * std::exp(-std::pow(z, w.shape));
}

// ---- tiny recursive-descent reader for the `name(arg, ...)` grammar -------

class SpecReader
{
public:
  explicit SpecReader(std::string_view text)
    : s_(text)
  {}

  std::string name()
  {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    if (pos_ == start)
      fail("expected a distribution name");
    std::string out(s_.substr(start, pos_ - start));
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
  }

  bool peek(char c)
  {
    skip_ws();
    return pos_ < s_.size() && s_[pos_] == c;
  }

  void expect(char c)
  {
    if (!peek(c))
      fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  double number()
  {
    skip_ws();
    const char* begin = s_.data() + pos_;
    const char* end = s_.data() + s_.size();
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || !std::isfinite(v))
      fail("expected a number");
    pos_ += static_cast<std::size_t>(ptr - begin);
    return v;
  }

  void finish()
  {
    skip_ws();
    if (pos_ != s_.size())
      fail("trailing characters");
  }

  [[noreturn]] void fail(const std::string& msg) const
  {
    throw ArgumentError("cannot parse '" + std::string(s_) + "' at offset " +
                        std::to_string(pos_) + ": " + msg);
  }

private:
  void skip_ws()
  {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

std::vector<double> numeric_args(SpecReader& r, std::size_t count)
{
  std::vector<double> out;
  r.expect('(');
  for (std::size_t i = 0; i < count; ++i) {
    if (i > 0)
      r.expect(',');
    out.push_back(r.number());
  }
  r.expect(')');
  return out;
}

Target read_target(SpecReader& r)
{
  const std::string n = r.name();
  if (n == "weibull") {
    const auto a = numeric_args(r, 2);
    return Target::weibull(a[0], a[1]);
  }
  if (n == "beta") {
    const auto a = numeric_args(r, 2);
    return Target::beta(a[0], a[1]);
  }
  if (n == "uniform") {
    r.expect('(');
    r.expect(')');
    return Target::beta(1.0, 1.0);
  }
  if (n == "exp_uniform_mix") {
    const auto a = numeric_args(r, 2);
    return Target::exp_uniform_mix(a[0], a[1]);
  }
  if (n == "mixture") {
    r.expect('(');
    const double w1 = r.number();
    r.expect(',');
    Target first = read_target(r);
    r.expect(',');
    const double w2 = r.number();
    r.expect(',');
    Target second = read_target(r);
    r.expect(')');
    return Target::mixture(w1, std::move(first), w2, std::move(second));
  }
  r.fail("unknown target '" + n + "'");
}

} // namespace

// ---------------------------------------------------------------------------
// Target

Target Target::weibull(double shape, double scale)
{
  require_positive(shape, "weibull shape");
  require_positive(scale, "weibull scale");
  return Target(Weibull{shape, scale});
}

Target Target::beta(double a, double b)
{
  require_positive(a, "beta a");
  require_positive(b, "beta b");
  return Target(Beta{a, b});
}

Target Target::exp_uniform_mix(double uniform_weight, double shift)
{
  if (!(uniform_weight >= 0.0 && uniform_weight <= 1.0))
    throw ArgumentError("exp_uniform_mix weight must lie in [0, 1]");
  if (!(shift >= 0.0) || !std::isfinite(shift))
    throw ArgumentError("exp_uniform_mix shift must be non-negative");
  return Target(ExpUniformMix{uniform_weight, shift});
}

Target Target::mixture(double w1, Target first, double w2, Target second)
{
  if (!(w1 > 0.0 && w2 > 0.0) || std::abs(w1 + w2 - 1.0) > 1e-12)
    throw ArgumentError("mixture weights must be positive and sum to one");
  return Target(Mixture{w1, std::make_shared<const Target>(std::move(first)), w2,
                        std::make_shared<const Target>(std::move(second))});
}

double Target::pdf(double x) const
{
  return std::visit(
    Overloaded{
      [&](const Weibull& w) { return weibull_pdf(w, x); },
      [&](const Beta& b) { return beta_pdf(b, x); },
      [&](const ExpUniformMix& m) {
        double v = 0.0;
        if (x >= 0.0 && x <= 1.0)
          v += m.uniform_weight;
        if (x >= m.shift)
          v += (1.0 - m.uniform_weight) * std::exp(-(x - m.shift));
        return v;
      },
      [&](const Mixture& m) { return m.w1 * m.first->pdf(x) + m.w2 * m.second->pdf(x); },
    },
    kind_);
}

double Target::cdf(double x) const
{
  return std::visit(
    Overloaded{
      [&](const Weibull& w) {
        if (x <= 0.0)
          return 0.0;
        return -std::expm1(-std::pow(x / w.scale, w.shape));
      },
      [&](const Beta& b) {
        if (x <= 0.0)
          return 0.0;
        if (x >= 1.0)
          return 1.0;
        return boost::math::cdf(as_boost(b), x);
      },
      [&](const ExpUniformMix& m) {
        double v = m.uniform_weight * std::clamp(x, 0.0, 1.0);
        if (x > m.shift)
          v += (1.0 - m.uniform_weight) * -std::expm1(-(x - m.shift));
        return v;
      },
      [&](const Mixture& m) { return m.w1 * m.first->cdf(x) + m.w2 * m.second->cdf(x); },
    },
    kind_);
}

double Target::quantile(double u) const
{
  if (!(u >= 0.0 && u <= 1.0))
    throw ArgumentError("quantile level must lie in [0, 1]");
  return std::visit(
    Overloaded{
      [&](const Weibull& w) {
        if (u >= 1.0)
          return kInf;
        return w.scale * std::pow(-std::log1p(-u), 1.0 / w.shape);
      },
      [&](const Beta& b) {
        if (u <= 0.0)
          return 0.0;
        if (u >= 1.0)
          return 1.0;
        return boost::math::quantile(as_boost(b), u);
      },
      [&](const ExpUniformMix& m) {
        if (u <= 0.0)
          return 0.0;
        if (u >= 1.0)
          return kInf;
        // cdf(x) >= u at x = max(1, shift) + tail quantile of the exponential part.
        const double w_exp = 1.0 - m.uniform_weight;
        double hi = std::max(1.0, m.shift);
        if (w_exp > 0.0)
          hi += -std::log(std::max((1.0 - u) / w_exp, 1e-300)) + 1.0;
        return invert_cdf([this](double x) { return cdf(x); }, u, 0.0, hi);
      },
      [&](const Mixture& m) {
        if (u <= 0.0)
          return 0.0;
        const double q1 = m.first->quantile(u);
        const double q2 = m.second->quantile(u);
        if (u >= 1.0)
          return std::max(q1, q2);
        return invert_cdf([this](double x) { return cdf(x); }, u, std::min(q1, q2),
                          std::max(q1, q2));
      },
    },
    kind_);
}

double Target::sample(Rng& rng) const
{
  return std::visit(
    Overloaded{
      [&](const Weibull& w) { return std::weibull_distribution<double>(w.shape, w.scale)(rng); },
      [&](const Beta& b) {
        const double g1 = std::gamma_distribution<double>(b.a, 1.0)(rng);
        const double g2 = std::gamma_distribution<double>(b.b, 1.0)(rng);
        return g1 / (g1 + g2);
      },
      [&](const ExpUniformMix& m) {
        if (uniform01(rng) < m.uniform_weight)
          return uniform01(rng);
        return m.shift + std::exponential_distribution<double>(1.0)(rng);
      },
      [&](const Mixture& m) {
        return uniform01(rng) < m.w1 ? m.first->sample(rng) : m.second->sample(rng);
      },
    },
    kind_);
}

std::vector<double> Target::sample(Rng& rng, std::size_t n) const
{
  std::vector<double> out(n);
  for (auto& v : out)
    v = sample(rng);
  return out;
}

Moments Target::moments() const
{
  return std::visit(
    Overloaded{
      [](const Weibull& w) {
        const double g1 = std::tgamma(1.0 + 1.0 / w.shape);
        const double g2 = std::tgamma(1.0 + 2.0 / w.shape);
        return Moments{w.scale * g1, w.scale * w.scale * (g2 - g1 * g1)};
      },
      [](const Beta& b) {
        const double s = b.a + b.b;
        return Moments{b.a / s, b.a * b.b / (s * s * (s + 1.0))};
      },
      [](const ExpUniformMix& m) {
        const double w = m.uniform_weight;
        const double mu_e = m.shift + 1.0;
        const double mean = w * 0.5 + (1.0 - w) * mu_e;
        const double second = w / 3.0 + (1.0 - w) * (1.0 + mu_e * mu_e);
        return Moments{mean, second - mean * mean};
      },
      [](const Mixture& m) {
        const Moments a = m.first->moments();
        const Moments b = m.second->moments();
        const double mean = m.w1 * a.mean + m.w2 * b.mean;
        const double second = m.w1 * (a.variance + a.mean * a.mean) +
                              m.w2 * (b.variance + b.mean * b.mean);
        return Moments{mean, second - mean * mean};
      },
    },
    kind_);
}

double Target::sd() const
{
  return std::sqrt(moments().variance);
}

std::string Target::describe() const
{
  return std::visit(
    Overloaded{
      [](const Weibull& w) { return "weibull(" + fmt(w.shape) + ", " + fmt(w.scale) + ")"; },
      [](const Beta& b) { return "beta(" + fmt(b.a) + ", " + fmt(b.b) + ")"; },
      [](const ExpUniformMix& m) {
        return "exp_uniform_mix(" + fmt(m.uniform_weight) + ", " + fmt(m.shift) + ")";
      },
      [](const Mixture& m) {
        return "mixture(" + fmt(m.w1) + ", " + m.first->describe() + ", " + fmt(m.w2) + ", " +
               m.second->describe() + ")";
      },
    },
    kind_);
}

Target parse_target(std::string_view text)
{
  SpecReader r(text);
  Target t = read_target(r);
  r.finish();
  return t;
}

Moments target_moments(const Target& t)
{
  return t.moments();
}

// ---------------------------------------------------------------------------
// ErrorModel

ErrorModel ErrorModel::none()
{
  return ErrorModel(NoError{});
}

ErrorModel ErrorModel::laplace(double sd)
{
  require_positive(sd, "laplace sd");
  return ErrorModel(Laplace{sd});
}

ErrorModel ErrorModel::symmetric_gamma(double shape, double scale)
{
  require_positive(shape, "symmetric gamma shape");
  require_positive(scale, "symmetric gamma scale");
  return ErrorModel(SymmetricGamma{shape, scale});
}

ErrorModel ErrorModel::lap_sg_mixture(double p, double shape, double scale, double laplace_scale)
{
  if (!(p >= 0.0 && p <= 1.0))
    throw ArgumentError("mixture weight p must lie in [0, 1]");
  require_positive(shape, "symmetric gamma shape");
  require_positive(scale, "symmetric gamma scale");
  if (p < 1.0)
    require_positive(laplace_scale, "laplace scale");
  return ErrorModel(LapSgMixture{p, shape, scale, laplace_scale});
}

double ErrorModel::char_fn_real(double t) const
{
  return std::visit(
    Overloaded{
      [](const NoError&) { return 1.0; },
      [&](const Laplace& l) { return 1.0 / (1.0 + 0.5 * l.sd * l.sd * t * t); },
      [&](const SymmetricGamma& g) { return std::pow(1.0 + g.scale * t * t, -g.shape); },
      [&](const LapSgMixture& m) {
        const double sg = std::pow(1.0 + m.scale * t * t, -m.shape);
        const double lap = 1.0 / (1.0 + m.laplace_scale * m.laplace_scale * t * t);
        return m.p * sg + (1.0 - m.p) * lap;
      },
    },
    kind_);
}

std::complex<double> ErrorModel::char_fn(double t) const
{
  return {char_fn_real(t), 0.0};
}

double ErrorModel::pdf(double x) const
{
  const auto sg_pdf = [](double shape, double scale, double x) {
    const double s = std::sqrt(scale);
    const double nu = shape - 0.5;
    const double norm = s * std::sqrt(std::numbers::pi) * std::tgamma(shape);
    const double ax = std::abs(x);
    if (ax == 0.0)
      return nu > 0.0 ? std::tgamma(nu) / (2.0 * norm) : kInf;
    return std::pow(ax / (2.0 * s), nu) * std::cyl_bessel_k(std::abs(nu), ax / s) / norm;
  };
  const auto lap_pdf = [](double b, double x) { return std::exp(-std::abs(x) / b) / (2.0 * b); };
  return std::visit(
    Overloaded{
      [](const NoError&) -> double {
        throw ArgumentError("the zero error model has no density");
      },
      [&](const Laplace& l) { return lap_pdf(l.sd / std::numbers::sqrt2, x); },
      [&](const SymmetricGamma& g) { return sg_pdf(g.shape, g.scale, x); },
      [&](const LapSgMixture& m) {
        const double lap = m.p < 1.0 ? lap_pdf(m.laplace_scale, x) : 0.0;
        return m.p * sg_pdf(m.shape, m.scale, x) + (1.0 - m.p) * lap;
      },
    },
    kind_);
}

double ErrorModel::sample(Rng& rng) const
{
  const auto laplace_draw = [&rng](double b) {
    std::exponential_distribution<double> e(1.0);
    const double e1 = e(rng);
    const double e2 = e(rng);
    return b * (e1 - e2);
  };
  const auto sg_draw = [&rng](double shape, double scale) {
    std::gamma_distribution<double> g(shape, std::sqrt(scale));
    const double g1 = g(rng);
    const double g2 = g(rng);
    return g1 - g2;
  };
  return std::visit(
    Overloaded{
      [](const NoError&) { return 0.0; },
      [&](const Laplace& l) { return laplace_draw(l.sd / std::numbers::sqrt2); },
      [&](const SymmetricGamma& g) { return sg_draw(g.shape, g.scale); },
      [&](const LapSgMixture& m) {
        if (uniform01(rng) < m.p)
          return sg_draw(m.shape, m.scale);
        return laplace_draw(m.laplace_scale);
      },
    },
    kind_);
}

std::vector<double> ErrorModel::sample(Rng& rng, std::size_t k) const
{
  std::vector<double> out(k);
  for (auto& v : out)
    v = sample(rng);
  return out;
}

namespace {
double sg_variance(double shape, double scale, SgVariance convention)
{
  return convention == SgVariance::char_fn ? 2.0 * shape * scale
                                           : shape * (1.0 + shape) * scale * scale;
}
} // namespace

double ErrorModel::variance(SgVariance convention) const
{
  return std::visit(
    Overloaded{
      [](const NoError&) { return 0.0; },
      [](const Laplace& l) { return l.sd * l.sd; },
      [&](const SymmetricGamma& g) { return sg_variance(g.shape, g.scale, convention); },
      [&](const LapSgMixture& m) {
        return m.p * sg_variance(m.shape, m.scale, convention) +
               (1.0 - m.p) * 2.0 * m.laplace_scale * m.laplace_scale;
      },
    },
    kind_);
}

std::string ErrorModel::describe() const
{
  return std::visit(
    Overloaded{
      [](const NoError&) { return std::string("none"); },
      [](const Laplace& l) { return "laplace(" + fmt(l.sd) + ")"; },
      [](const SymmetricGamma& g) {
        return "symmetric_gamma(" + fmt(g.shape) + ", " + fmt(g.scale) + ")";
      },
      [](const LapSgMixture& m) {
        return "lap_sg_mixture(" + fmt(m.p) + ", " + fmt(m.shape) + ", " + fmt(m.scale) + ", " +
               fmt(m.laplace_scale) + ")";
      },
    },
    kind_);
}

ErrorModel parse_error_model(std::string_view text)
{
  SpecReader r(text);
  const std::string n = r.name();
  ErrorModel em = ErrorModel::none();
  if (n == "none") {
    if (r.peek('(')) {
      r.expect('(');
      r.expect(')');
    }
  } else if (n == "laplace") {
    em = ErrorModel::laplace(numeric_args(r, 1)[0]);
  } else if (n == "symmetric_gamma") {
    const auto a = numeric_args(r, 2);
    em = ErrorModel::symmetric_gamma(a[0], a[1]);
  } else if (n == "lap_sg_mixture") {
    const auto a = numeric_args(r, 4);
    em = ErrorModel::lap_sg_mixture(a[0], a[1], a[2], a[3]);
  } else {
    r.fail("unknown error model '" + n + "'");
  }
  r.finish();
  return em;
}

ErrorModel::LapSgMixture default_mixture_template()
{
  return {0.01, 0.24, 0.25, 0.0};
}

ErrorModel calibrate_nsr(const ErrorModel::LapSgMixture& tmpl,
                         double sigma_x,
                         double nsr,
                         SgVariance convention)
{
  require_positive(nsr, "nsr");
  require_positive(sigma_x, "sigma_x");
  const double target_var = (nsr * sigma_x) * (nsr * sigma_x);
  const double sg_share = tmpl.p * sg_variance(tmpl.shape, tmpl.scale, convention);
  const double laplace_share = target_var - sg_share;
  if (!(laplace_share > 0.0) || !(tmpl.p < 1.0))
    throw CalibrationError("symmetric-gamma component alone has variance " + fmt(sg_share) +
                           ", which leaves nothing for the Laplace part of the target " +
                           fmt(target_var));
  const double b = std::sqrt(laplace_share / (2.0 * (1.0 - tmpl.p)));
  return ErrorModel::lap_sg_mixture(tmpl.p, tmpl.shape, tmpl.scale, b);
}

ErrorModel calibrate_nsr(const ErrorModel::LapSgMixture& tmpl,
                         const Target& target,
                         double nsr,
                         SgVariance convention)
{
  return calibrate_nsr(tmpl, target.sd(), nsr, convention);
}

} // namespace lcmdeconv
