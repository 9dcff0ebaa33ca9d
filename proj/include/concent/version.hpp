#pragma once

namespace concent {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace concent
