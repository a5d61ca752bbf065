#pragma once

namespace referee {

inline constexpr char kVersion[] = "0.1.0";

}  // namespace referee
