#pragma once

namespace smartpower {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace smartpower
