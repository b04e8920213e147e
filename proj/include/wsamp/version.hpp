#pragma once

namespace wsamp {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace wsamp
