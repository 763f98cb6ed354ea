#pragma once

namespace tempo {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace tempo
