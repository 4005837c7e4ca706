#pragma once

#include <stdexcept>
#include <string>

namespace lcmdeconv {

// Bad input to a function: empty samples, mismatched grids, out-of-range
// parameters.
class ArgumentError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

// No error model satisfies the requested noise-to-signal ratio.
class CalibrationError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// The error characteristic function is (numerically) zero somewhere on the
// truncated frequency range, so the inversion is not defined.
class IllPosedError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// The raw CDF estimate ends too low to be normalized into a distribution.
class DegenerateNormalizerError : public std::runtime_error
{
public:
  DegenerateNormalizerError(const std::string& what, double limit)
    : std::runtime_error(what)
    , limit_value(limit)
  {}

  double limit_value;
};

// An envelope handed to the bootstrap sampler does not end at one.
class NotADistributionError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

} // namespace lcmdeconv
