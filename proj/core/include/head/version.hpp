#pragma once

namespace head {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace head
