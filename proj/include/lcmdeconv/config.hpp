#pragma once

#include "lcmdeconv/concavity_test.hpp"
#include "lcmdeconv/deconv.hpp"
#include "lcmdeconv/distributions.hpp"
#include "lcmdeconv/errors.hpp"
#include "lcmdeconv/experiments.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lcmdeconv {

// Malformed or out-of-range configuration. line() is 1-based, 0 when the
// problem is not tied to one line (e.g. a missing section).
class ConfigError : public ArgumentError
{
public:
  ConfigError(const std::string& source, std::size_t line, const std::string& what);

  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

struct ConfigValue
{
  enum class Type
  {
    number,
    string,
    boolean,
    array,
  };
  Type type = Type::string;
  // Number text as written, or the unescaped string.
  std::string text;
  bool boolean = false;
  std::vector<ConfigValue> items;
  std::size_t line = 0;
};

//! Flat sectioned key = value file:
//!
//!   # comment
//!   [section]
//!   key = 1.5
//!   name = "text"
//!   flag = true
//!   list = [1, 2, 3]
//!
//! Section names may contain dots (`[target.w1]`). Keys and sections may
//! appear only once.
class Config
{
public:
  static Config parse(std::string_view text, std::string source = "<config>");
  static Config load(const std::string& path);

  const std::string& source() const { return source_; }

  bool has_section(const std::string& name) const;
  std::size_t section_line(const std::string& name) const;
  //! Section names starting with `prefix`, in file order.
  std::vector<std::string> sections_with_prefix(std::string_view prefix) const;
  const ConfigValue* find(const std::string& section, const std::string& key) const;

  //! Throws ConfigError for any key of `section` not in `known`.
  void require_known_keys(const std::string& section, const std::vector<std::string>& known) const;
  //! Throws ConfigError for any section not in `known` and not starting
  //! with one of `prefixes`.
  void require_known_sections(const std::vector<std::string>& known,
                              const std::vector<std::string>& prefixes = {}) const;

  // Typed accessors; the plain forms throw when the key is missing.
  double get_double(const std::string& section, const std::string& key) const;
  std::optional<double> get_optional_double(const std::string& section, const std::string& key) const;
  std::int64_t get_int(const std::string& section, const std::string& key) const;
  std::optional<std::int64_t> get_optional_int(const std::string& section, const std::string& key) const;
  std::optional<std::uint64_t> get_optional_uint64(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key) const;
  std::optional<std::string> get_optional_string(const std::string& section, const std::string& key) const;
  std::optional<bool> get_optional_bool(const std::string& section, const std::string& key) const;
  std::vector<double> get_double_list(const std::string& section, const std::string& key) const;
  std::vector<std::int64_t> get_int_list(const std::string& section, const std::string& key) const;

  [[noreturn]] void fail(std::size_t line, const std::string& what) const;
  [[noreturn]] void fail_at(const std::string& section, const std::string& key, const std::string& what) const;

private:
  struct Section
  {
    std::size_t line = 0;
    std::map<std::string, ConfigValue> values;
  };

  const ConfigValue& require(const std::string& section, const std::string& key) const;

  std::string source_;
  std::map<std::string, Section> sections_;
  std::vector<std::string> order_;
};

// Builders. Each validates every field against the owning type's rules and
// reports the offending line.

//! [kernel] r, s; [grid] points, freq_nodes, pad_sd; [bandwidth] h, rule.
DeconvOptions deconv_options_from(const Config& cfg);
//! [error] model = "laplace(0.1)" etc. Missing section means no error.
ErrorModel error_model_from(const Config& cfg);
//! [test] gamma, m_exponent, B, calibration, seed, bootstrap_bandwidth.
TestConfig test_config_from(const Config& cfg);
//! [study] plus one [target.<label>] section per sweep point, [noise] for the
//! rejection study, [test] and the estimator sections above.
ExperimentPlan experiment_plan_from(const Config& cfg);

//! [output] dir, when given.
std::optional<std::string> output_dir_from(const Config& cfg);
//! [input] data, when given.
std::optional<std::string> data_path_from(const Config& cfg);

} // namespace lcmdeconv
