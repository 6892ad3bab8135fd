#pragma once

namespace crystalite {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace crystalite
