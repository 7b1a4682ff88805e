#pragma once

namespace curatree {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace curatree
