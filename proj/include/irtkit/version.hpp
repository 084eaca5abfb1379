#pragma once

namespace irtkit {

inline constexpr const char* kToolName = "irtkit";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace irtkit
