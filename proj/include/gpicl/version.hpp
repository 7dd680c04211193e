#pragma once

namespace gpicl {

inline constexpr const char* kToolName = "gpicl";
inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kTaskSetFormatVersion = 1;

}  // namespace gpicl
