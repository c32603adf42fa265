#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace distress {

/// Machine-readable error category. The CLI maps each to a distinct exit code.
enum class ErrorKind {
  kOutOfDomain,
  kResource,
  kDimension,
  kDegenerateSubset,
  kParameter,
  kIo,
  kUsage,
  kAggregation,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace distress
