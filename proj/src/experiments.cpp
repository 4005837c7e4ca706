#include "lcmdeconv/experiments.hpp"

#include "lcmdeconv/errors.hpp"
#include "lcmdeconv/lcm.hpp"
#include "lcmdeconv/parallel.hpp"
#include "lcmdeconv/seeding.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>
#include <tuple>

#ifndef LCMDECONV_VERSION
#define LCMDECONV_VERSION "unknown"
#endif

namespace lcmdeconv {

namespace {

constexpr double kMaxFailureFraction = 0.1;

std::string g6(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string g17(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
std::string join(const std::vector<T>& v, std::string (*fmt)(T))
{
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i)
      out += ", ";
    out += fmt(v[i]);
  }
  return out;
}

std::string size_str(std::size_t v) { return std::to_string(v); }

std::vector<std::string_view> split(std::string_view s, char sep)
{
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t c = s.find(sep, start);
    if (c == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, c - start));
    start = c + 1;
  }
}

double parse_double(std::string_view s, const char* field)
{
  if (s == "nan")
    return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ArgumentError(std::string("study csv: bad value for ") + field + ": '" +
                        std::string(s) + "'");
  return v;
}

std::size_t parse_size(std::string_view s, const char* field)
{
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ArgumentError(std::string("study csv: bad value for ") + field + ": '" +
                        std::string(s) + "'");
  return v;
}

bool parse_bool(std::string_view s)
{
  if (s == "true")
    return true;
  if (s == "false")
    return false;
  throw ArgumentError("study csv: expected true or false, got '" + std::string(s) + "'");
}

struct Cell
{
  const SweepPoint* point;
  std::size_t n;
  double nsr;
  std::uint64_t id;
};

std::vector<Cell> cells_of(const ExperimentPlan& plan)
{
  std::vector<Cell> cells;
  for (const auto& p : plan.targets)
    for (const std::size_t n : plan.n_levels)
      for (const double nsr : plan.nsr_levels)
        cells.push_back({&p, n, nsr, cell_id(cell_label(p, n, nsr))});
  return cells;
}

bool row_less(const StudyRow& a, const StudyRow& b)
{
  const double qa = a.quantile.value_or(-1.0);
  const double qb = b.quantile.value_or(-1.0);
  return std::tie(a.target, a.parameter, a.n, a.nsr, qa) <
         std::tie(b.target, b.parameter, b.n, b.nsr, qb);
}

// Outcome of one replicate; a failed replicate carries no values.
struct MseSample
{
  bool ok = false;
  std::vector<double> err_unconstrained;
  std::vector<double> err_constrained;
};

struct TestSample
{
  bool ok = false;
  bool reject = false;
};

template <class Fn>
bool run_replicate(Fn&& fn)
{
  try {
    fn();
    return true;
  } catch (const DegenerateNormalizerError&) {
  } catch (const IllPosedError&) {
  } catch (const NotADistributionError&) {
  }
  return false;
}

} // namespace

std::string to_string(Study s)
{
  return s == Study::mse_ratio ? "mse_ratio" : "rejection_rate";
}

Study parse_study(std::string_view s)
{
  if (s == "mse_ratio")
    return Study::mse_ratio;
  if (s == "rejection_rate")
    return Study::rejection_rate;
  throw ArgumentError("unknown study '" + std::string(s) +
                      "' (expected mse_ratio or rejection_rate)");
}

void ExperimentPlan::validate() const
{
  if (targets.empty())
    throw ArgumentError("plan: no targets");
  std::set<std::string> labels;
  for (const auto& p : targets) {
    if (p.label.empty() || p.label.find_first_of(",\"\n\r|") != std::string::npos)
      throw ArgumentError("plan: target label '" + p.label +
                          "' must be non-empty and contain no commas, quotes or '|'");
    if (!labels.insert(p.label).second)
      throw ArgumentError("plan: duplicate target label '" + p.label + "'");
    if (!std::isfinite(p.parameter))
      throw ArgumentError("plan: sweep parameter must be finite");
  }
  if (nsr_levels.empty() || n_levels.empty())
    throw ArgumentError("plan: nsr_levels and n_levels must be non-empty");
  for (const double v : nsr_levels)
    if (!(v > 0.0) || !std::isfinite(v))
      throw ArgumentError("plan: nsr levels must be positive");
  for (const std::size_t n : n_levels)
    if (n < 20)
      throw ArgumentError("plan: sample sizes must be at least 20");
  if (M < 10)
    throw ArgumentError("plan: M must be at least 10");
  if (study == Study::mse_ratio) {
    if (quantile_levels.empty())
      throw ArgumentError("plan: mse study needs quantile levels");
    for (const double q : quantile_levels)
      if (!(q > 0.0 && q < 1.0))
        throw ArgumentError("plan: quantile levels must lie strictly inside (0, 1)");
  } else {
    test_cfg.validate();
    if (!(noise_template.p >= 0.0 && noise_template.p < 1.0))
      throw ArgumentError("plan: noise mixture weight must lie in [0, 1)");
  }
}

std::string cell_label(const SweepPoint& p, std::size_t n, double nsr)
{
  return p.label + "|" + g17(p.parameter) + "|" + std::to_string(n) + "|" + g17(nsr);
}

StudyResult run_mse_study(const ExperimentPlan& plan)
{
  if (plan.study != Study::mse_ratio)
    throw ArgumentError("run_mse_study: plan is not an mse study");
  plan.validate();
  const auto cells = cells_of(plan);
  const std::size_t M = plan.M;
  const std::size_t nq = plan.quantile_levels.size();

  // True quantiles per target.
  std::vector<std::vector<double>> xq(plan.targets.size());
  for (std::size_t t = 0; t < plan.targets.size(); ++t)
    for (const double q : plan.quantile_levels)
      xq[t].push_back(plan.targets[t].target.quantile(q));

  std::vector<MseSample> samples(cells.size() * M);
  parallel_for(samples.size(), plan.threads, [&](std::size_t job) {
    const Cell& c = cells[job / M];
    const std::size_t r = job % M;
    const auto t = static_cast<std::size_t>(c.point - plan.targets.data());
    const std::uint64_t s = seed_for(plan.master_seed, c.id, r);
    Rng rng(seed_for(s, 0, 0));
    const Target& target = c.point->target;
    const ErrorModel em = ErrorModel::laplace(c.nsr * target.sd());
    std::vector<double> y = target.sample(rng, c.n);
    const auto eps = em.sample(rng, c.n);
    for (std::size_t i = 0; i < c.n; ++i)
      y[i] += eps[i];

    MseSample& out = samples[job];
    out.ok = run_replicate([&] {
      const DeconvEstimate est = estimate(y, em, plan.options);
      const ConcaveEnvelope env = lcm(est.cdf_norm);
      out.err_unconstrained.resize(nq);
      out.err_constrained.resize(nq);
      for (std::size_t k = 0; k < nq; ++k) {
        const double q = plan.quantile_levels[k];
        out.err_unconstrained[k] = est.cdf_norm(xq[t][k]) - q;
        out.err_constrained[k] = env(xq[t][k]) - q;
      }
    });
  });

  StudyResult result;
  result.study = Study::mse_ratio;
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    const Cell& c = cells[ci];
    std::size_t ok = 0;
    std::vector<double> sse_u(nq, 0.0);
    std::vector<double> sse_c(nq, 0.0);
    for (std::size_t r = 0; r < M; ++r) {
      const MseSample& s = samples[ci * M + r];
      if (!s.ok)
        continue;
      ++ok;
      for (std::size_t k = 0; k < nq; ++k) {
        sse_u[k] += s.err_unconstrained[k] * s.err_unconstrained[k];
        sse_c[k] += s.err_constrained[k] * s.err_constrained[k];
      }
    }
    for (std::size_t k = 0; k < nq; ++k) {
      StudyRow row;
      row.target = c.point->label;
      row.parameter = c.point->parameter;
      row.n = c.n;
      row.nsr = c.nsr;
      row.quantile = plan.quantile_levels[k];
      row.replicates = ok;
      row.failures = M - ok;
      row.valid = static_cast<double>(row.failures) <= kMaxFailureFraction * static_cast<double>(M);
      if (ok > 0) {
        row.mse_unconstrained = sse_u[k] / static_cast<double>(ok);
        row.mse_constrained = sse_c[k] / static_cast<double>(ok);
      }
      row.ratio = row.mse_unconstrained > 0.0 ? row.mse_constrained / row.mse_unconstrained
                                              : std::numeric_limits<double>::quiet_NaN();
      result.rows.push_back(std::move(row));
    }
  }
  std::sort(result.rows.begin(), result.rows.end(), row_less);
  return result;
}

StudyResult run_power_study(const ExperimentPlan& plan)
{
  if (plan.study != Study::rejection_rate)
    throw ArgumentError("run_power_study: plan is not a rejection-rate study");
  plan.validate();
  const auto cells = cells_of(plan);
  const std::size_t M = plan.M;

  std::vector<ErrorModel> noise;
  noise.reserve(cells.size());
  for (const Cell& c : cells)
    noise.push_back(calibrate_nsr(plan.noise_template, c.point->target, c.nsr, plan.sg_convention));

  std::vector<TestSample> samples(cells.size() * M);
  parallel_for(samples.size(), plan.threads, [&](std::size_t job) {
    const std::size_t ci = job / M;
    const Cell& c = cells[ci];
    const std::size_t r = job % M;
    const std::uint64_t s = seed_for(plan.master_seed, c.id, r);
    Rng rng(seed_for(s, 0, 0));
    const ErrorModel& em = noise[ci];
    std::vector<double> y = c.point->target.sample(rng, c.n);
    const auto eps = em.sample(rng, c.n);
    for (std::size_t i = 0; i < c.n; ++i)
      y[i] += eps[i];

    TestConfig cfg = plan.test_cfg;
    cfg.seed = s;
    cfg.threads = 1;
    TestSample& out = samples[job];
    out.ok = run_replicate([&] { out.reject = run_test(y, em, plan.options, cfg).reject; });
  });

  StudyResult result;
  result.study = Study::rejection_rate;
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    const Cell& c = cells[ci];
    std::size_t ok = 0;
    std::size_t rejects = 0;
    for (std::size_t r = 0; r < M; ++r) {
      const TestSample& s = samples[ci * M + r];
      if (!s.ok)
        continue;
      ++ok;
      rejects += s.reject ? 1 : 0;
    }
    StudyRow row;
    row.target = c.point->label;
    row.parameter = c.point->parameter;
    row.n = c.n;
    row.nsr = c.nsr;
    row.replicates = ok;
    row.failures = M - ok;
    row.valid = static_cast<double>(row.failures) <= kMaxFailureFraction * static_cast<double>(M);
    if (ok > 0) {
      const double p = static_cast<double>(rejects) / static_cast<double>(ok);
      row.rejection_rate = p;
      row.standard_error = std::sqrt(p * (1.0 - p) / static_cast<double>(ok));
    }
    result.rows.push_back(std::move(row));
  }
  std::sort(result.rows.begin(), result.rows.end(), row_less);
  return result;
}

StudyResult run_study(const ExperimentPlan& plan)
{
  return plan.study == Study::mse_ratio ? run_mse_study(plan) : run_power_study(plan);
}

std::string study_csv_header(Study s)
{
  if (s == Study::mse_ratio)
    return "target,parameter,n,nsr,quantile,mse_constrained,mse_unconstrained,ratio,"
           "replicates,failures,valid";
  return "target,parameter,n,nsr,rejection_rate,standard_error,replicates,failures,valid";
}

std::string to_csv(const StudyResult& r)
{
  std::ostringstream os;
  os << study_csv_header(r.study) << '\n';
  for (const auto& row : r.rows) {
    os << row.target << ',' << g6(row.parameter) << ',' << row.n << ',' << g6(row.nsr) << ',';
    if (r.study == Study::mse_ratio)
      os << g6(row.quantile.value_or(0.0)) << ',' << g6(row.mse_constrained) << ','
         << g6(row.mse_unconstrained) << ',' << g6(row.ratio) << ',';
    else
      os << g6(row.rejection_rate) << ',' << g6(row.standard_error) << ',';
    os << row.replicates << ',' << row.failures << ',' << (row.valid ? "true" : "false") << '\n';
  }
  return os.str();
}

StudyResult parse_study_csv(std::string_view text)
{
  auto lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty())
    lines.pop_back();
  if (lines.empty())
    throw ArgumentError("study csv: empty input");
  StudyResult r;
  if (lines[0] == study_csv_header(Study::mse_ratio))
    r.study = Study::mse_ratio;
  else if (lines[0] == study_csv_header(Study::rejection_rate))
    r.study = Study::rejection_rate;
  else
    throw ArgumentError("study csv: unrecognized header '" + std::string(lines[0]) + "'");
  const std::size_t width = r.study == Study::mse_ratio ? 11 : 9;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i], ',');
    if (f.size() != width)
      throw ArgumentError("study csv: line " + std::to_string(i + 1) + " has " +
                          std::to_string(f.size()) + " fields, expected " +
                          std::to_string(width));
    StudyRow row;
    row.target = std::string(f[0]);
    row.parameter = parse_double(f[1], "parameter");
    row.n = parse_size(f[2], "n");
    row.nsr = parse_double(f[3], "nsr");
    std::size_t k = 4;
    if (r.study == Study::mse_ratio) {
      row.quantile = parse_double(f[k++], "quantile");
      row.mse_constrained = parse_double(f[k++], "mse_constrained");
      row.mse_unconstrained = parse_double(f[k++], "mse_unconstrained");
      row.ratio = parse_double(f[k++], "ratio");
    } else {
      row.rejection_rate = parse_double(f[k++], "rejection_rate");
      row.standard_error = parse_double(f[k++], "standard_error");
    }
    row.replicates = parse_size(f[k++], "replicates");
    row.failures = parse_size(f[k++], "failures");
    row.valid = parse_bool(f[k]);
    r.rows.push_back(std::move(row));
  }
  return r;
}

std::string library_version()
{
  return LCMDECONV_VERSION;
}

std::string manifest(const ExperimentPlan& plan)
{
  std::ostringstream os;
  os << "version = " << library_version() << '\n';
  os << "master_seed = " << plan.master_seed << '\n';
  os << "study = " << to_string(plan.study) << '\n';
  for (const auto& p : plan.targets)
    os << "target." << p.label << " = " << p.target.describe() << " ; parameter "
       << g17(p.parameter) << '\n';
  os << "nsr_levels = " << join(plan.nsr_levels, g17) << '\n';
  os << "n_levels = " << join(plan.n_levels, size_str) << '\n';
  os << "M = " << plan.M << '\n';
  if (plan.study == Study::mse_ratio) {
    os << "quantile_levels = " << join(plan.quantile_levels, g17) << '\n';
    os << "error = laplace calibrated to nsr\n";
  } else {
    const auto& t = plan.test_cfg;
    os << "gamma = " << g17(t.gamma) << '\n'
       << "m_exponent = " << g17(t.m_exponent) << '\n'
       << "B = " << t.B << '\n'
       << "calibration = " << to_string(t.calibration) << '\n';
    if (t.bootstrap_bandwidth)
      os << "bootstrap_bandwidth = " << g17(*t.bootstrap_bandwidth) << '\n';
    const auto& nt = plan.noise_template;
    os << "error = lap_sg_mixture(" << g17(nt.p) << ", " << g17(nt.shape) << ", "
       << g17(nt.scale) << ", calibrated)\n";
    os << "sg_variance = "
       << (plan.sg_convention == SgVariance::char_fn ? "char_fn" : "gamma_second_moment") << '\n';
  }
  const auto& o = plan.options;
  os << "kernel = (1 - t^" << o.kernel.r() << ")^" << o.kernel.s() << '\n'
     << "grid_points = " << o.grid_points << '\n'
     << "freq_nodes = " << o.freq_nodes << '\n'
     << "grid_pad_sd = " << g17(o.grid_pad_sd) << '\n';
  if (o.bandwidth)
    os << "bandwidth = " << g17(*o.bandwidth) << '\n';
  else
    os << "bandwidth_rule = " << to_string(o.bandwidth_rule) << '\n';
  return os.str();
}

} // namespace lcmdeconv
