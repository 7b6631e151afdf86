#pragma once

namespace freeball {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace freeball
