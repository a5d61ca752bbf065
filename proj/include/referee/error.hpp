#pragma once

#include <stdexcept>
#include <string>

namespace referee {

// Stable machine-readable failure codes. CLI subcommands emit them as a JSON
// object on stderr; validation-class failures exit 1, backend/internal
// failures exit 2.
enum class ErrCode {
  Io,             // E_INPUT: file or directory missing / unreadable
  Parse,          // E_PARSE: source file could not be parsed at all
  BadRequest,     // E_BAD_REQUEST: invalid arguments or config values
  BadFixture,     // E_BAD_FIXTURE: malformed dataset / stub / api-docs input
  Backend,        // E_BACKEND: model backend failed after retries
  BadResponse,    // E_BAD_RESPONSE: model reply never yielded a 0/1 token
  ZeroVariance,   // E_ZERO_VARIANCE: correlation undefined, constant vector
  Internal,       // E_INTERNAL: invariant violation, always a bug
};

// Exit status a CLI command should use for a given failure.
inline int exit_code_for(ErrCode code) noexcept {
  switch (code) {
    case ErrCode::Backend:
    case ErrCode::BadResponse:
    case ErrCode::Internal:
      return 2;
    default:
      return 1;
  }
}

const char* errcode_name(ErrCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  ErrCode code() const noexcept { return code_; }
  const char* code_name() const noexcept { return errcode_name(code_); }

 private:
  ErrCode code_;
};

[[noreturn]] inline void fail(ErrCode code, std::string message) {
  throw Error(code, std::move(message));
}

}  // namespace referee
