#pragma once

namespace ugift {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ugift
