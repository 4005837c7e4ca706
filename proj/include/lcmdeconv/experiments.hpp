#pragma once

#include "lcmdeconv/concavity_test.hpp"
#include "lcmdeconv/deconv.hpp"
#include "lcmdeconv/distributions.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lcmdeconv {

enum class Study
{
  mse_ratio,
  rejection_rate,
};

std::string to_string(Study s);
Study parse_study(std::string_view s);

//! One target in a sweep. `label` names the cell in output and seeds its
//! random streams, so it must be unique within a plan and free of commas.
struct SweepPoint
{
  std::string label;
  double parameter = 0.0;
  Target target = Target::beta(1.0, 1.0);
};

struct ExperimentPlan
{
  Study study = Study::rejection_rate;
  std::vector<SweepPoint> targets;
  std::vector<double> nsr_levels;
  std::vector<std::size_t> n_levels;
  std::size_t M = 200;
  // Mse study only.
  std::vector<double> quantile_levels;
  // Rejection study only. The seed and threads fields are ignored; each
  // replicate gets its own seed and runs on one worker.
  TestConfig test_cfg;
  // Noise for the rejection study; the Laplace scale is calibrated per cell.
  ErrorModel::LapSgMixture noise_template = default_mixture_template();
  SgVariance sg_convention = SgVariance::gamma_second_moment;
  DeconvOptions options;
  std::uint64_t master_seed = 0;
  unsigned threads = 1;

  //! Throws ArgumentError when an invariant is violated.
  void validate() const;
};

struct StudyRow
{
  std::string target;
  double parameter = 0.0;
  std::size_t n = 0;
  double nsr = 0.0;
  // Quantile level; set for mse rows only.
  std::optional<double> quantile;

  double mse_constrained = 0.0;
  double mse_unconstrained = 0.0;
  // mse_constrained / mse_unconstrained, NaN when the denominator is 0.
  double ratio = 0.0;

  double rejection_rate = 0.0;
  double standard_error = 0.0;

  // Replicates that produced an estimate, and those that failed.
  std::size_t replicates = 0;
  std::size_t failures = 0;
  // False when more than 10% of the replicates failed.
  bool valid = true;
};

struct StudyResult
{
  Study study = Study::rejection_rate;
  // Sorted by (target, parameter, n, nsr, quantile).
  std::vector<StudyRow> rows;
};

//! Cell label used for seeding; independent of the cell's position in the plan.
std::string cell_label(const SweepPoint& p, std::size_t n, double nsr);

StudyResult run_mse_study(const ExperimentPlan& plan);
StudyResult run_power_study(const ExperimentPlan& plan);
StudyResult run_study(const ExperimentPlan& plan);

std::string study_csv_header(Study s);
std::string to_csv(const StudyResult& r);
StudyResult parse_study_csv(std::string_view text);

//! Flat key = value echo of the plan plus version and master seed.
std::string manifest(const ExperimentPlan& plan);

//! git-describe style version of the library build.
std::string library_version();

} // namespace lcmdeconv
