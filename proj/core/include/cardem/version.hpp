#pragma once

namespace cardem {

inline constexpr const char* kEngineVersion = "0.1.0";

}
