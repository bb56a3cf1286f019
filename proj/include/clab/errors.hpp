#pragma once

#include <stdexcept>
#include <string>

namespace clab {

// Every failure mode the library reports. The C API maps these 1:1 onto
// integer status codes, so keep the order in sync with cocyclelab.h.
enum class ErrorCode {
  ok = 0,
  not_unimodular,
  not_hyperbolic,
  leaf_radius_exceeded,
  leaf_mismatch,
  overflow,
  no_convergence,
  degenerate,
  not_invariant,
  multiple_moduli,
  gap_too_small,
  not_bounded,
  twist_not_bounded,
  singular_conjugacy,
  insufficient_signal,
  config_error,
  invalid_argument,
  io_error,
  internal,
};

class LabError : public std::runtime_error {
 public:
  LabError(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw LabError(code, what);
}

}  // namespace clab
