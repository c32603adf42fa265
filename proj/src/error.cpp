#include "distress/error.hpp"

namespace distress {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kOutOfDomain: return "out-of-domain";
    case ErrorKind::kResource: return "resource";
    case ErrorKind::kDimension: return "dimension";
    case ErrorKind::kDegenerateSubset: return "degenerate-subset";
    case ErrorKind::kParameter: return "parameter";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kUsage: return "usage";
    case ErrorKind::kAggregation: return "aggregation";
  }
  return "unknown";
}

}  // namespace distress
