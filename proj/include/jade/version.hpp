#pragma once

namespace jade {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace jade
