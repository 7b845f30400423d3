#ifndef REPBIAS_ERROR_H_
#define REPBIAS_ERROR_H_

#include <stdexcept>
#include <string>

namespace repbias {

// Malformed or unusable input data, such as an unreadable file or a corpus
// that filtering leaves empty. The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid caller-supplied parameter (out-of-range k, lambda, fraction...).
// Also exit code 2.
class UsageError : public std::invalid_argument {
 public:
  explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

// Solver failure: eigen-solver or SMO did not converge. Exit code 1.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace repbias

#endif  // REPBIAS_ERROR_H_
