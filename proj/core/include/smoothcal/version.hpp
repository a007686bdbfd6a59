#pragma once

namespace smoothcal {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace smoothcal
