#pragma once

namespace resnet_limits {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kSchemaLine = "# resnet-limits-schema v1";

}  // namespace resnet_limits
