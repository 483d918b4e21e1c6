#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace gcstiff::csv {

/// 9 significant digits, '.' decimal separator, locale independent.
std::string formatNumber(double value);

/// Full round-trip precision (17 significant digits).
std::string formatExact(double value);

std::vector<std::string> splitFields(std::string_view line, char sep = ',');

std::string_view trim(std::string_view text);

/// Strict parse of the whole field; throws std::invalid_argument otherwise.
double parseDouble(std::string_view text);

}  // namespace gcstiff::csv
