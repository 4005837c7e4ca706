#include "commands.hpp"

#include "lcmdeconv/concavity_test.hpp"
#include "lcmdeconv/config.hpp"
#include "lcmdeconv/deconv.hpp"
#include "lcmdeconv/errors.hpp"
#include "lcmdeconv/experiments.hpp"
#include "lcmdeconv/lcm.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

namespace lcmdeconv::cli {

namespace fs = std::filesystem;

namespace {

struct Flags
{
  std::string config;
  std::string data;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
};

std::string g6(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Config load_config(const Flags& f)
{
  if (f.config.empty())
    return Config::parse("", "<defaults>");
  return Config::load(f.config);
}

fs::path output_dir(const Flags& f, const Config& cfg)
{
  if (!f.out.empty())
    return f.out;
  if (const char* env = std::getenv(kOutDirEnv); env && *env)
    return env;
  if (auto dir = output_dir_from(cfg))
    return *dir;
  return ".";
}

fs::path data_path(const Flags& f, const Config& cfg)
{
  if (!f.data.empty())
    return f.data;
  if (auto p = data_path_from(cfg))
    return *p;
  throw ArgumentError("no data file given (use --data or [input] data)");
}

void write_file(const fs::path& path, const std::string& content)
{
  if (path.has_parent_path())
    fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  os << content;
  os.flush();
  if (!os)
    throw std::runtime_error("cannot write " + path.string());
}

void check_sections(const Config& cfg, std::vector<std::string> known,
                    std::vector<std::string> prefixes = {})
{
  known.insert(known.end(), {"kernel", "grid", "bandwidth", "error", "output", "input"});
  cfg.require_known_sections(known, prefixes);
}

int cmd_estimate(const Flags& f, std::ostream& out)
{
  const Config cfg = load_config(f);
  check_sections(cfg, {});
  const DeconvOptions options = deconv_options_from(cfg);
  const ErrorModel em = error_model_from(cfg);
  const fs::path dir = output_dir(f, cfg);
  const auto data = read_observations(data_path(f, cfg));

  const DeconvEstimate est = estimate(data, em, options);
  const ConcaveEnvelope env = lcm(est.cdf_norm);

  std::ostringstream csv;
  csv << "x,density,cdf_raw,cdf_norm,lcm_cdf_norm,lcm_slope\n";
  const auto xs = est.cdf_raw.xs();
  const auto raw = est.cdf_raw.ys();
  const auto norm = est.cdf_norm.ys();
  const auto lcm_vals = env.values_on(xs);
  for (std::size_t i = 0; i < xs.size(); ++i)
    csv << g6(xs[i]) << ',' << g6(est.density(xs[i])) << ',' << g6(raw[i]) << ',' << g6(norm[i])
        << ',' << g6(lcm_vals[i]) << ',' << g6(env.slope(xs[i])) << '\n';
  write_file(dir / "estimate.csv", csv.str());

  std::ostringstream summary;
  summary << "n,h,limit_value\n"
          << est.n << ',' << g6(est.bandwidth) << ',' << g6(est.limit_value) << '\n';
  write_file(dir / "estimate_summary.csv", summary.str());

  out << "n = " << est.n << ", h = " << g6(est.bandwidth)
      << ", limit_value = " << g6(est.limit_value) << '\n'
      << "wrote " << (dir / "estimate.csv").string() << '\n';
  return kExitOk;
}

int cmd_test(const Flags& f, std::ostream& out)
{
  const Config cfg = load_config(f);
  check_sections(cfg, {"test"});
  const DeconvOptions options = deconv_options_from(cfg);
  const ErrorModel em = error_model_from(cfg);
  TestConfig tc = test_config_from(cfg);
  if (f.seed)
    tc.seed = *f.seed;
  if (f.threads)
    tc.threads = *f.threads;
  const fs::path dir = output_dir(f, cfg);
  const auto data = read_observations(data_path(f, cfg));

  const TestReport report = run_test(data, em, options, tc);

  write_file(dir / "test_report.csv", test_report_csv_header() + "\n" + to_csv_row(report) + "\n");
  std::ostringstream reps;
  reps << "replicate,statistic\n";
  for (std::size_t b = 0; b < report.replicates.size(); ++b)
    reps << b << ',' << g6(report.replicates[b]) << '\n';
  write_file(dir / "test_replicates.csv", reps.str());

  out << to_key_value(report) << "wrote " << (dir / "test_report.csv").string() << '\n';
  return kExitOk;
}

int cmd_simulate(const Flags& f, std::ostream& out)
{
  if (f.config.empty())
    throw ArgumentError("simulate needs --config");
  const Config cfg = load_config(f);
  check_sections(cfg, {"study", "test", "noise"}, {"target."});
  ExperimentPlan plan = experiment_plan_from(cfg);
  if (f.seed)
    plan.master_seed = *f.seed;
  if (f.threads)
    plan.threads = *f.threads;
  const fs::path dir = output_dir(f, cfg);

  const StudyResult result = run_study(plan);
  const std::string name = to_string(plan.study);
  write_file(dir / (name + ".csv"), to_csv(result));
  write_file(dir / (name + "_manifest.txt"), manifest(plan));

  std::size_t invalid = 0;
  for (const auto& row : result.rows)
    invalid += row.valid ? 0 : 1;
  out << "wrote " << (dir / (name + ".csv")).string() << " (" << result.rows.size() << " rows)\n";
  if (invalid > 0) {
    out << invalid << " row(s) marked invalid: more than 10% of replicates failed\n";
    return kExitRuntime;
  }
  return kExitOk;
}

} // namespace

std::vector<double> read_observations(const fs::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ArgumentError("cannot open data file " + path.string());
  std::vector<double> values;
  std::vector<std::size_t> bad;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view s(line);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
      s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
      s.remove_suffix(1);
    if (s.empty())
      continue;
    if (s.front() == '+')
      s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
      bad.push_back(line_no);
      continue;
    }
    values.push_back(v);
  }
  if (!bad.empty()) {
    std::string msg = path.string() + ": non-numeric value on line";
    msg += bad.size() > 1 ? "s " : " ";
    const std::size_t shown = std::min<std::size_t>(bad.size(), 10);
    for (std::size_t i = 0; i < shown; ++i)
      msg += (i ? ", " : "") + std::to_string(bad[i]);
    if (bad.size() > shown)
      msg += " and " + std::to_string(bad.size() - shown) + " more";
    throw ArgumentError(msg);
  }
  if (values.empty())
    throw ArgumentError(path.string() + ": no observations");
  return values;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
  CLI::App app{"Deconvolution CDF estimation and concavity testing", "lcmdeconv"};
  app.set_version_flag("--version", library_version());
  app.require_subcommand(1);

  Flags flags;
  const auto add_common = [&](CLI::App* sub, bool with_data) {
    sub->add_option("--config", flags.config, "Configuration file")->check(CLI::ExistingFile);
    if (with_data)
      sub->add_option("--data", flags.data, "Observations, one per line");
    sub->add_option("--out", flags.out, "Output directory");
    sub->add_option("--seed", flags.seed, "Random seed");
    sub->add_option("--threads", flags.threads, "Worker threads")->check(CLI::Range(1u, 1024u));
  };
  CLI::App* est = app.add_subcommand("estimate", "Estimate the CDF of X from noisy data");
  add_common(est, true);
  CLI::App* test = app.add_subcommand("test", "Test concavity of the CDF of X");
  add_common(test, true);
  CLI::App* sim = app.add_subcommand("simulate", "Run a simulation study");
  add_common(sim, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (est->parsed())
      return cmd_estimate(flags, out);
    if (test->parsed())
      return cmd_test(flags, out);
    return cmd_simulate(flags, out);
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

} // namespace lcmdeconv::cli
