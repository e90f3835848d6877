#pragma once

namespace contraction {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace contraction
