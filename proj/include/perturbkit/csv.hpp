#pragma once

#include <string>

namespace perturbkit {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

/// Quotes a CSV field when it contains a comma, quote or newline.
std::string csv_field(const std::string& text);

} // namespace perturbkit
