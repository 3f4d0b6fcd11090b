#pragma once

namespace bmseg {

inline constexpr const char* kVersion = "bmseg 0.1.0";

}  // namespace bmseg
