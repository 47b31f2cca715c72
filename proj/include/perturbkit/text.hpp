#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace perturbkit {

// Lowercases ASCII, Latin-1 Supplement, Latin Extended-A and Cyrillic code
// points. Anything else (and malformed UTF-8) passes through unchanged.
std::string utf8_lower(std::string_view text);

std::vector<std::string> split(std::string_view text, char sep);

std::string_view trim(std::string_view text);

// "nmod:poss" -> "nmod"
std::string_view base_relation(std::string_view deprel);

} // namespace perturbkit
