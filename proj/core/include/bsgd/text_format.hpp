#pragma once

#include <optional>
#include <string>

namespace bsgd {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
/// Empty string for a missing value.
std::string format_optional(const std::optional<double>& value);

}  // namespace bsgd
