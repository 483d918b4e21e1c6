#include "gcstiff/csv.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>

namespace gcstiff::csv {

namespace {

std::string formatWith(const char* fmt, double value) {
  char buf[64];
  const int n = std::snprintf(buf, sizeof(buf), fmt, value);
  std::string out(buf, static_cast<std::size_t>(n));
  if (out == "-0") out = "0";
  return out;
}

}  // namespace

std::string formatNumber(double value) { return formatWith("%.9g", value); }

std::string formatExact(double value) { return formatWith("%.17g", value); }

std::vector<std::string> splitFields(std::string_view line, char sep) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    fields.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return fields;
}

std::string_view trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

double parseDouble(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace gcstiff::csv
