#pragma once

namespace trace {
inline constexpr const char* kVersion = "0.1.0";
}
