#pragma once

#include <stdexcept>
#include <string>

namespace simbacl {

/// Process exit codes used by the CLI; library errors carry the matching code.
enum class ErrorCode : int {
  ok = 0,
  config = 2,     // malformed configuration / parameters
  data = 3,       // malformed or mismatched input data
  numeric = 4,    // numerical failure (zero likelihood, collapse, degenerate kernel)
  capacity = 5,   // size guard exceeded
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ErrorCode::config, what) {}
};

struct DataError : Error {
  explicit DataError(const std::string& what) : Error(ErrorCode::data, what) {}
};

struct NumericError : Error {
  explicit NumericError(const std::string& what) : Error(ErrorCode::numeric, what) {}
};

struct CapacityError : Error {
  explicit CapacityError(const std::string& what) : Error(ErrorCode::capacity, what) {}
};

}  // namespace simbacl
