#include "adamlab/csv.hpp"

#include <fmt/format.h>

namespace adamlab {

std::string format_float(double x) { return fmt::format("{:.17g}", x); }

}  // namespace adamlab
