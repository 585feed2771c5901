#pragma once

namespace heavytail {

inline constexpr const char* version = "0.1.0";

} // namespace heavytail
