#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bgn {

/// Error categories shared by the C++ core and the C API (mapped 1:1 to
/// BGN_E_* codes in bgn.h).
enum class Errc {
  ok = 0,
  invalid_arg,
  entry_not_binary,
  dim_mismatch,
  non_finite,
  parse_error,
  inconsistent_dims,
  unknown_node,
  insufficient_class_members,
  bad_param,
  index_out_of_range,
  stale_cache,
  diverged_loss,
  infeasible_substitution,
  uninitialized_state,
  io_error,
  internal,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::ok: return "ok";
    case Errc::invalid_arg: return "invalid_arg";
    case Errc::entry_not_binary: return "entry_not_binary";
    case Errc::dim_mismatch: return "dim_mismatch";
    case Errc::non_finite: return "non_finite";
    case Errc::parse_error: return "parse_error";
    case Errc::inconsistent_dims: return "inconsistent_dims";
    case Errc::unknown_node: return "unknown_node";
    case Errc::insufficient_class_members: return "insufficient_class_members";
    case Errc::bad_param: return "bad_param";
    case Errc::index_out_of_range: return "index_out_of_range";
    case Errc::stale_cache: return "stale_cache";
    case Errc::diverged_loss: return "diverged_loss";
    case Errc::infeasible_substitution: return "infeasible_substitution";
    case Errc::uninitialized_state: return "uninitialized_state";
    case Errc::io_error: return "io_error";
    case Errc::internal: return "internal";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string msg)
      : std::runtime_error(std::move(msg)), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, std::string msg) {
  throw Error(code, std::move(msg));
}

inline void require(bool cond, Errc code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

}  // namespace bgn
