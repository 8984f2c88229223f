#pragma once

#include <stdexcept>
#include <string>

namespace hdlp {

/// Malformed or inconsistent input data (bad files, non-finite values, degenerate panels).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every split of an interval was flagged untestable, so the max statistic does not exist.
class StatisticUndefined : public DataError {
 public:
  StatisticUndefined() : DataError("statistic undefined") {}
};

/// Invalid parameter value (alpha outside (0,1), bad window, short interval, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace hdlp
