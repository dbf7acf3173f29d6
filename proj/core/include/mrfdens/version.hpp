#pragma once

namespace mrfdens {

inline constexpr const char* kProjectName = "mrfdens";
inline constexpr const char* kVersion = "1.0.0";

}  // namespace mrfdens
