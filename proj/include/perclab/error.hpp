#pragma once

#include <stdexcept>
#include <string>

namespace perc {

enum class ErrorCode {
  usage = 1,
  invariant = 2,
  budget_exceeded = 3,
  io = 4,
  config_mismatch = 5,
  region_too_large = 6,
  nonpositive_estimate = 7,
  cluster_touches_boundary = 8,
};

const char* error_code_name(ErrorCode code);

// CLI exit status for an error code: 1 usage-like, 2 invariant, 3 budget.
int exit_status(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace perc
