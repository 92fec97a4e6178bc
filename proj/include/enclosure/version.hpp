#pragma once

namespace enclosure {

inline constexpr const char* tool_name = "enclosure";
inline constexpr const char* tool_version = "0.1.0";

}  // namespace enclosure
