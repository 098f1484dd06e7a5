#pragma once

#include <string>

namespace nlresolvent {

/// Locale-independent shortest-safe rendering with 17 significant digits,
/// '.' decimal separator. Round-trips exactly through strtod.
std::string format_number(double v);

}  // namespace nlresolvent
