#pragma once

#include <stdexcept>
#include <string>

namespace ucd {

// Each error family maps to one CLI exit code (see tools/ucd.cpp).

/// API misuse: calling an operation out of order or with invalid handles.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Invalid configuration values or flag combinations.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values or divergence during computation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A statistic that is not defined for the given input (e.g. rank
/// correlation of a constant sequence).
class UndefinedStatistic : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace ucd
