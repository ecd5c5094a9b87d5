#pragma once

namespace ispinv {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ispinv
