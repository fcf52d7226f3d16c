#pragma once

namespace dormancy {

inline constexpr const char* kToolName = "dormancy_lab";
inline constexpr const char* kVersion = "0.1.0";

}  // namespace dormancy
