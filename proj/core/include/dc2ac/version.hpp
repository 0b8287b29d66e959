#pragma once

namespace dc2ac {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dc2ac
