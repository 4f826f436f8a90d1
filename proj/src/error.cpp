#include "perclab/error.hpp"

namespace perc {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::usage: return "usage";
    case ErrorCode::invariant: return "invariant_violation";
    case ErrorCode::budget_exceeded: return "budget_exceeded";
    case ErrorCode::io: return "io";
    case ErrorCode::config_mismatch: return "config_mismatch";
    case ErrorCode::region_too_large: return "region_too_large";
    case ErrorCode::nonpositive_estimate: return "nonpositive_estimate";
    case ErrorCode::cluster_touches_boundary: return "cluster_touches_boundary";
  }
  return "unknown";
}

int exit_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::invariant:
    case ErrorCode::cluster_touches_boundary:
      return 2;
    case ErrorCode::budget_exceeded:
      return 3;
    default:
      return 1;
  }
}

}  // namespace perc
