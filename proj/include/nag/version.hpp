#pragma once

namespace nag {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace nag
