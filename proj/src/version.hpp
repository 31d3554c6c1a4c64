#pragma once

namespace csigpr {

inline constexpr const char* kVersion = "0.1.0";

} // namespace csigpr
