#include "referee/error.hpp"

namespace referee {

const char* errcode_name(ErrCode code) noexcept {
  switch (code) {
    case ErrCode::Io:           return "E_INPUT";
    case ErrCode::Parse:        return "E_PARSE";
    case ErrCode::BadRequest:   return "E_BAD_REQUEST";
    case ErrCode::BadFixture:   return "E_BAD_FIXTURE";
    case ErrCode::Backend:      return "E_BACKEND";
    case ErrCode::BadResponse:  return "E_BAD_RESPONSE";
    case ErrCode::ZeroVariance: return "E_ZERO_VARIANCE";
    case ErrCode::Internal:     return "E_INTERNAL";
  }
  return "E_INTERNAL";
}

}  // namespace referee
