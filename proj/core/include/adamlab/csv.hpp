#pragma once

#include <ostream>
#include <string>

namespace adamlab {

/// Shortest-form-independent float text: always 17 significant digits.
std::string format_float(double x);

/// Writes `x` formatted with format_float.
inline std::ostream& put_float(std::ostream& out, double x) { return out << format_float(x); }

}  // namespace adamlab
