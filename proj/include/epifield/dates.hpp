#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace epifield {

using Day = std::chrono::sys_days;

/// Parses YYYY-MM-DD. Throws ParseError on anything else.
Day parse_date(std::string_view text);
std::string format_date(Day day);

inline long days_between(Day from, Day to) { return (to - from).count(); }
inline Day add_days(Day d, long n) { return d + std::chrono::days{n}; }

} // namespace epifield
