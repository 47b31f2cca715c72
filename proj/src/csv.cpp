#include "perturbkit/csv.hpp"

#include <charconv>
#include <cmath>

namespace perturbkit {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (value == 0.0) return "0";  // folds -0
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, end);
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

} // namespace perturbkit
