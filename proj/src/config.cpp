#include "lcmdeconv/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace lcmdeconv {

namespace {

std::string_view trim(std::string_view s)
{
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

bool is_name_char(char c, bool allow_dot)
{
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
         (allow_dot && c == '.');
}

bool valid_name(std::string_view s, bool allow_dot)
{
  return !s.empty() && std::all_of(s.begin(), s.end(), [&](char c) { return is_name_char(c, allow_dot); });
}

// Strip a trailing comment, respecting quoted strings.
std::string_view strip_comment(std::string_view line)
{
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted && c == '\\') {
      ++i;
      continue;
    }
    if (c == '"')
      quoted = !quoted;
    else if (c == '#' && !quoted)
      return line.substr(0, i);
  }
  return line;
}

bool is_number(std::string_view s)
{
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(v);
}

class ValueParser
{
public:
  ValueParser(std::string_view text, std::size_t line)
    : text_(text)
    , line_(line)
  {}

  // Returns an error message, empty on success.
  std::string parse(ConfigValue& out)
  {
    std::string err = value(out, true);
    if (!err.empty())
      return err;
    skip_ws();
    if (pos_ != text_.size())
      return "unexpected trailing text '" + std::string(text_.substr(pos_)) + "'";
    return {};
  }

private:
  void skip_ws()
  {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  std::string value(ConfigValue& out, bool allow_array)
  {
    skip_ws();
    out.line = line_;
    if (pos_ >= text_.size())
      return "missing value";
    const char c = text_[pos_];
    if (c == '"')
      return string(out);
    if (c == '[') {
      if (!allow_array)
        return "nested arrays are not supported";
      return array(out);
    }
    std::size_t end = pos_;
    while (end < text_.size() && text_[end] != ',' && text_[end] != ']' &&
           !std::isspace(static_cast<unsigned char>(text_[end])))
      ++end;
    const std::string_view tok = text_.substr(pos_, end - pos_);
    pos_ = end;
    if (tok == "true" || tok == "false") {
      out.type = ConfigValue::Type::boolean;
      out.boolean = tok == "true";
      out.text = std::string(tok);
      return {};
    }
    std::string_view num = tok;
    if (!num.empty() && num.front() == '+')
      num.remove_prefix(1);
    if (!is_number(num))
      return "cannot parse value '" + std::string(tok) + "' (strings must be quoted)";
    out.type = ConfigValue::Type::number;
    out.text = std::string(num);
    return {};
  }

  std::string string(ConfigValue& out)
  {
    ++pos_;
    std::string s;
    while (pos_ < text_.size()) {
      const char c = text_[pos_++];
      if (c == '"') {
        out.type = ConfigValue::Type::string;
        out.text = std::move(s);
        return {};
      }
      if (c == '\\') {
        if (pos_ >= text_.size())
          break;
        const char e = text_[pos_++];
        if (e == 'n')
          s += '\n';
        else if (e == 't')
          s += '\t';
        else if (e == '"' || e == '\\')
          s += e;
        else
          return std::string("unknown escape '\\") + e + "'";
        continue;
      }
      s += c;
    }
    return "unterminated string";
  }

  std::string array(ConfigValue& out)
  {
    ++pos_;
    out.type = ConfigValue::Type::array;
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == ']') {
      ++pos_;
      return {};
    }
    for (;;) {
      ConfigValue item;
      std::string err = value(item, false);
      if (!err.empty())
        return err;
      out.items.push_back(std::move(item));
      skip_ws();
      if (pos_ >= text_.size())
        return "unterminated array";
      const char c = text_[pos_++];
      if (c == ']')
        return {};
      if (c != ',')
        return std::string("expected ',' or ']' in array, got '") + c + "'";
    }
  }

  std::string_view text_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

const char* type_name(ConfigValue::Type t)
{
  switch (t) {
    case ConfigValue::Type::number:
      return "number";
    case ConfigValue::Type::string:
      return "string";
    case ConfigValue::Type::boolean:
      return "boolean";
    case ConfigValue::Type::array:
      return "array";
  }
  return "value";
}

bool parse_int_text(const std::string& text, std::int64_t& v)
{
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  return ec == std::errc() && ptr == text.data() + text.size();
}

} // namespace

ConfigError::ConfigError(const std::string& source, std::size_t line, const std::string& what)
  : ArgumentError(line > 0 ? source + ":" + std::to_string(line) + ": " + what
                           : source + ": " + what)
  , line_(line)
{}

Config Config::parse(std::string_view text, std::string source)
{
  Config cfg;
  cfg.source_ = std::move(source);
  std::string current;
  cfg.sections_[current].line = 0;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    const std::size_t end = nl == std::string_view::npos ? text.size() : nl;
    const std::string_view raw = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    const std::string_view line = trim(strip_comment(raw));
    if (line.empty()) {
      if (nl == std::string_view::npos)
        break;
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']')
        cfg.fail(line_no, "malformed section header");
      const std::string_view name = trim(line.substr(1, line.size() - 2));
      if (!valid_name(name, true))
        cfg.fail(line_no, "invalid section name '" + std::string(name) + "'");
      current = std::string(name);
      if (cfg.sections_.count(current))
        cfg.fail(line_no, "duplicate section [" + current + "]");
      cfg.sections_[current].line = line_no;
      cfg.order_.push_back(current);
    } else {
      const std::size_t eq = line.find('=');
      if (eq == std::string_view::npos)
        cfg.fail(line_no, "expected 'key = value'");
      const std::string key(trim(line.substr(0, eq)));
      if (!valid_name(key, false))
        cfg.fail(line_no, "invalid key '" + key + "'");
      ConfigValue v;
      const std::string err = ValueParser(trim(line.substr(eq + 1)), line_no).parse(v);
      if (!err.empty())
        cfg.fail(line_no, err);
      auto& sec = cfg.sections_[current];
      if (sec.values.count(key))
        cfg.fail(line_no, "duplicate key '" + key + "'");
      sec.values.emplace(key, std::move(v));
    }
    if (nl == std::string_view::npos)
      break;
  }
  const auto& root = cfg.sections_[""];
  if (!root.values.empty())
    cfg.fail(root.values.begin()->second.line, "key '" + root.values.begin()->first +
                                                 "' appears before any [section]");
  return cfg;
}

Config Config::load(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ConfigError(path, 0, "cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

void Config::fail(std::size_t line, const std::string& what) const
{
  throw ConfigError(source_, line, what);
}

void Config::fail_at(const std::string& section, const std::string& key, const std::string& what) const
{
  const ConfigValue* v = find(section, key);
  const std::size_t line = v ? v->line : section_line(section);
  fail(line, "[" + section + "] " + key + ": " + what);
}

bool Config::has_section(const std::string& name) const
{
  return !name.empty() && sections_.count(name) > 0;
}

std::size_t Config::section_line(const std::string& name) const
{
  const auto it = sections_.find(name);
  return it == sections_.end() ? 0 : it->second.line;
}

std::vector<std::string> Config::sections_with_prefix(std::string_view prefix) const
{
  std::vector<std::string> out;
  for (const auto& name : order_)
    if (name.size() > prefix.size() && std::string_view(name).substr(0, prefix.size()) == prefix)
      out.push_back(name);
  return out;
}

const ConfigValue* Config::find(const std::string& section, const std::string& key) const
{
  const auto it = sections_.find(section);
  if (it == sections_.end())
    return nullptr;
  const auto v = it->second.values.find(key);
  return v == it->second.values.end() ? nullptr : &v->second;
}

void Config::require_known_keys(const std::string& section, const std::vector<std::string>& known) const
{
  const auto it = sections_.find(section);
  if (it == sections_.end())
    return;
  for (const auto& [key, value] : it->second.values)
    if (std::find(known.begin(), known.end(), key) == known.end())
      fail(value.line, "unknown key '" + key + "' in [" + section + "]");
}

void Config::require_known_sections(const std::vector<std::string>& known,
                                    const std::vector<std::string>& prefixes) const
{
  for (const auto& name : order_) {
    if (std::find(known.begin(), known.end(), name) != known.end())
      continue;
    const bool prefixed = std::any_of(prefixes.begin(), prefixes.end(), [&](const std::string& p) {
      return name.size() > p.size() && name.compare(0, p.size(), p) == 0;
    });
    if (!prefixed)
      fail(section_line(name), "unknown section [" + name + "]");
  }
}

const ConfigValue& Config::require(const std::string& section, const std::string& key) const
{
  const ConfigValue* v = find(section, key);
  if (!v)
    fail(section_line(section), "missing required key '" + key + "' in [" + section + "]");
  return *v;
}

double Config::get_double(const std::string& section, const std::string& key) const
{
  const ConfigValue& v = require(section, key);
  if (v.type != ConfigValue::Type::number)
    fail_at(section, key, std::string("expected a number, got a ") + type_name(v.type));
  return std::stod(v.text);
}

std::optional<double> Config::get_optional_double(const std::string& section, const std::string& key) const
{
  if (!find(section, key))
    return std::nullopt;
  return get_double(section, key);
}

std::int64_t Config::get_int(const std::string& section, const std::string& key) const
{
  const ConfigValue& v = require(section, key);
  std::int64_t out = 0;
  if (v.type != ConfigValue::Type::number || !parse_int_text(v.text, out))
    fail_at(section, key, "expected an integer");
  return out;
}

std::optional<std::int64_t> Config::get_optional_int(const std::string& section, const std::string& key) const
{
  if (!find(section, key))
    return std::nullopt;
  return get_int(section, key);
}

std::optional<std::uint64_t> Config::get_optional_uint64(const std::string& section,
                                                         const std::string& key) const
{
  const ConfigValue* v = find(section, key);
  if (!v)
    return std::nullopt;
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v->text.data(), v->text.data() + v->text.size(), out);
  if (v->type != ConfigValue::Type::number || ec != std::errc() ||
      ptr != v->text.data() + v->text.size())
    fail_at(section, key, "expected a non-negative integer");
  return out;
}

std::string Config::get_string(const std::string& section, const std::string& key) const
{
  const ConfigValue& v = require(section, key);
  if (v.type != ConfigValue::Type::string)
    fail_at(section, key, std::string("expected a quoted string, got a ") + type_name(v.type));
  return v.text;
}

std::optional<std::string> Config::get_optional_string(const std::string& section,
                                                       const std::string& key) const
{
  if (!find(section, key))
    return std::nullopt;
  return get_string(section, key);
}

std::optional<bool> Config::get_optional_bool(const std::string& section, const std::string& key) const
{
  const ConfigValue* v = find(section, key);
  if (!v)
    return std::nullopt;
  if (v->type != ConfigValue::Type::boolean)
    fail_at(section, key, "expected true or false");
  return v->boolean;
}

std::vector<double> Config::get_double_list(const std::string& section, const std::string& key) const
{
  const ConfigValue& v = require(section, key);
  if (v.type != ConfigValue::Type::array)
    fail_at(section, key, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& item : v.items) {
    if (item.type != ConfigValue::Type::number)
      fail_at(section, key, "expected an array of numbers");
    out.push_back(std::stod(item.text));
  }
  return out;
}

std::vector<std::int64_t> Config::get_int_list(const std::string& section, const std::string& key) const
{
  const ConfigValue& v = require(section, key);
  if (v.type != ConfigValue::Type::array)
    fail_at(section, key, "expected an array of integers");
  std::vector<std::int64_t> out;
  for (const auto& item : v.items) {
    std::int64_t x = 0;
    if (item.type != ConfigValue::Type::number || !parse_int_text(item.text, x))
      fail_at(section, key, "expected an array of integers");
    out.push_back(x);
  }
  return out;
}

// ---------------------------------------------------------------------------

DeconvOptions deconv_options_from(const Config& cfg)
{
  cfg.require_known_keys("kernel", {"r", "s"});
  cfg.require_known_keys("grid", {"points", "freq_nodes", "pad_sd"});
  cfg.require_known_keys("bandwidth", {"h", "rule"});

  DeconvOptions o;
  const auto r = cfg.get_optional_int("kernel", "r").value_or(o.kernel.r());
  const auto s = cfg.get_optional_int("kernel", "s").value_or(o.kernel.s());
  if (r < 2 || r % 2 != 0 || r > 64)
    cfg.fail_at("kernel", "r", "must be an even integer in [2, 64]");
  if (s < 1 || s > 16)
    cfg.fail_at("kernel", "s", "must be an integer in [1, 16]");
  o.kernel = KernelSpec(static_cast<int>(r), static_cast<int>(s));

  if (const auto p = cfg.get_optional_int("grid", "points")) {
    if (*p < 16 || *p > 1'000'000)
      cfg.fail_at("grid", "points", "must lie in [16, 1000000]");
    o.grid_points = static_cast<std::size_t>(*p);
  }
  if (const auto p = cfg.get_optional_int("grid", "freq_nodes")) {
    if (*p < 16 || *p > 1'000'000)
      cfg.fail_at("grid", "freq_nodes", "must lie in [16, 1000000]");
    o.freq_nodes = static_cast<std::size_t>(*p);
  }
  if (const auto p = cfg.get_optional_double("grid", "pad_sd")) {
    if (!(*p >= 0.0))
      cfg.fail_at("grid", "pad_sd", "must be non-negative");
    o.grid_pad_sd = *p;
  }
  if (const auto h = cfg.get_optional_double("bandwidth", "h")) {
    if (!(*h > 0.0))
      cfg.fail_at("bandwidth", "h", "must be positive");
    o.bandwidth = *h;
  }
  if (const auto rule = cfg.get_optional_string("bandwidth", "rule")) {
    try {
      o.bandwidth_rule = parse_bandwidth_rule(*rule);
    } catch (const ArgumentError& e) {
      cfg.fail_at("bandwidth", "rule", e.what());
    }
  }
  return o;
}

ErrorModel error_model_from(const Config& cfg)
{
  cfg.require_known_keys("error", {"model"});
  const auto text = cfg.get_optional_string("error", "model");
  if (!text)
    return ErrorModel::none();
  try {
    return parse_error_model(*text);
  } catch (const ArgumentError& e) {
    cfg.fail_at("error", "model", e.what());
  }
}

TestConfig test_config_from(const Config& cfg)
{
  cfg.require_known_keys("test",
                         {"gamma", "m_exponent", "B", "calibration", "seed", "bootstrap_bandwidth"});
  TestConfig t;
  if (const auto g = cfg.get_optional_double("test", "gamma")) {
    if (!(*g > 0.0 && *g < 0.5))
      cfg.fail_at("test", "gamma", "must lie in (0, 0.5)");
    t.gamma = *g;
  }
  if (const auto e = cfg.get_optional_double("test", "m_exponent")) {
    if (!(*e > 0.0 && *e < 1.0))
      cfg.fail_at("test", "m_exponent", "must lie in (0, 1)");
    t.m_exponent = *e;
  }
  if (const auto b = cfg.get_optional_int("test", "B")) {
    if (*b < 50)
      cfg.fail_at("test", "B", "must be at least 50");
    t.B = static_cast<std::size_t>(*b);
  }
  if (const auto c = cfg.get_optional_string("test", "calibration")) {
    try {
      t.calibration = parse_calibration(*c);
    } catch (const ArgumentError& e) {
      cfg.fail_at("test", "calibration", e.what());
    }
  }
  if (const auto s = cfg.get_optional_uint64("test", "seed"))
    t.seed = *s;
  if (const auto h = cfg.get_optional_double("test", "bootstrap_bandwidth")) {
    if (!(*h > 0.0))
      cfg.fail_at("test", "bootstrap_bandwidth", "must be positive");
    t.bootstrap_bandwidth = *h;
  }
  return t;
}

ExperimentPlan experiment_plan_from(const Config& cfg)
{
  if (!cfg.has_section("study"))
    cfg.fail(0, "missing [study] section");
  cfg.require_known_keys("study", {"kind", "nsr_levels", "n_levels", "M", "quantile_levels",
                                   "master_seed", "threads", "sg_variance"});
  ExperimentPlan plan;
  const std::string kind = cfg.get_string("study", "kind");
  try {
    plan.study = parse_study(kind);
  } catch (const ArgumentError& e) {
    cfg.fail_at("study", "kind", e.what());
  }

  plan.nsr_levels = cfg.get_double_list("study", "nsr_levels");
  if (plan.nsr_levels.empty())
    cfg.fail_at("study", "nsr_levels", "must not be empty");
  for (const double v : plan.nsr_levels)
    if (!(v > 0.0))
      cfg.fail_at("study", "nsr_levels", "levels must be positive");

  const auto ns = cfg.get_int_list("study", "n_levels");
  if (ns.empty())
    cfg.fail_at("study", "n_levels", "must not be empty");
  for (const auto n : ns) {
    if (n < 20)
      cfg.fail_at("study", "n_levels", "sample sizes must be at least 20");
    plan.n_levels.push_back(static_cast<std::size_t>(n));
  }

  const auto M = cfg.get_int("study", "M");
  if (M < 10)
    cfg.fail_at("study", "M", "must be at least 10");
  plan.M = static_cast<std::size_t>(M);

  if (plan.study == Study::mse_ratio) {
    plan.quantile_levels = cfg.get_double_list("study", "quantile_levels");
    if (plan.quantile_levels.empty())
      cfg.fail_at("study", "quantile_levels", "must not be empty");
    for (const double q : plan.quantile_levels)
      if (!(q > 0.0 && q < 1.0))
        cfg.fail_at("study", "quantile_levels", "levels must lie strictly inside (0, 1)");
  } else if (cfg.find("study", "quantile_levels")) {
    cfg.fail_at("study", "quantile_levels", "only used by the mse_ratio study");
  }

  if (const auto s = cfg.get_optional_uint64("study", "master_seed"))
    plan.master_seed = *s;
  if (const auto t = cfg.get_optional_int("study", "threads")) {
    if (*t < 1 || *t > 1024)
      cfg.fail_at("study", "threads", "must lie in [1, 1024]");
    plan.threads = static_cast<unsigned>(*t);
  }
  if (const auto c = cfg.get_optional_string("study", "sg_variance")) {
    if (*c == "char_fn")
      plan.sg_convention = SgVariance::char_fn;
    else if (*c == "gamma_second_moment")
      plan.sg_convention = SgVariance::gamma_second_moment;
    else
      cfg.fail_at("study", "sg_variance", "expected \"char_fn\" or \"gamma_second_moment\"");
  }

  const auto target_sections = cfg.sections_with_prefix("target.");
  if (target_sections.empty())
    cfg.fail(cfg.section_line("study"), "no [target.<label>] sections");
  for (const auto& sec : target_sections) {
    cfg.require_known_keys(sec, {"spec", "parameter"});
    SweepPoint p;
    p.label = sec.substr(std::string("target.").size());
    if (p.label.find('.') != std::string::npos)
      cfg.fail(cfg.section_line(sec), "target label '" + p.label + "' must not contain '.'");
    try {
      p.target = parse_target(cfg.get_string(sec, "spec"));
    } catch (const ConfigError&) {
      throw;
    } catch (const ArgumentError& e) {
      cfg.fail_at(sec, "spec", e.what());
    }
    p.parameter = cfg.get_optional_double(sec, "parameter").value_or(0.0);
    plan.targets.push_back(std::move(p));
  }

  cfg.require_known_keys("noise", {"p", "shape", "scale"});
  if (const auto v = cfg.get_optional_double("noise", "p")) {
    if (!(*v >= 0.0 && *v < 1.0))
      cfg.fail_at("noise", "p", "must lie in [0, 1)");
    plan.noise_template.p = *v;
  }
  if (const auto v = cfg.get_optional_double("noise", "shape")) {
    if (!(*v > 0.0))
      cfg.fail_at("noise", "shape", "must be positive");
    plan.noise_template.shape = *v;
  }
  if (const auto v = cfg.get_optional_double("noise", "scale")) {
    if (!(*v > 0.0))
      cfg.fail_at("noise", "scale", "must be positive");
    plan.noise_template.scale = *v;
  }

  plan.test_cfg = test_config_from(cfg);
  plan.options = deconv_options_from(cfg);
  try {
    plan.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const ArgumentError& e) {
    cfg.fail(cfg.section_line("study"), e.what());
  }
  return plan;
}

std::optional<std::string> output_dir_from(const Config& cfg)
{
  cfg.require_known_keys("output", {"dir"});
  return cfg.get_optional_string("output", "dir");
}

std::optional<std::string> data_path_from(const Config& cfg)
{
  cfg.require_known_keys("input", {"data"});
  return cfg.get_optional_string("input", "data");
}

} // namespace lcmdeconv
