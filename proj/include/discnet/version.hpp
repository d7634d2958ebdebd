#pragma once

namespace discnet {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace discnet
