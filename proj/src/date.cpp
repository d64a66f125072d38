#include "ideotrack/date.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <regex>
#include <vector>

#include "ideotrack/error.hpp"

namespace ideotrack {

namespace {

using std::chrono::day;
using std::chrono::month;
using std::chrono::sys_days;
using std::chrono::year;

constexpr std::array<std::string_view, 12> kMonthNames = {
    "january", "february", "march",     "april",   "may",      "june",
    "july",    "august",   "september", "october", "november", "december"};

std::optional<unsigned> month_from_word(std::string word) {
  std::transform(word.begin(), word.end(), word.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (word.size() < 3) return std::nullopt;
  if (word == "sept") return 9u;
  for (unsigned i = 0; i < kMonthNames.size(); ++i) {
    const auto& name = kMonthNames[i];
    if (word == name || (word.size() == 3 && name.substr(0, 3) == word)) return i + 1;
  }
  return std::nullopt;
}

// Two-digit years follow the POSIX strptime pivot: 69-99 -> 19xx, 00-68 -> 20xx.
int expand_year(const std::string& digits) {
  const int value = std::stoi(digits);
  if (digits.size() > 2) return value;
  return value < 69 ? 2000 + value : 1900 + value;
}

std::optional<Date> checked(int y, unsigned m, unsigned d) {
  if (m < 1 || m > 12 || d < 1) return std::nullopt;
  Date date{year{y}, month{m}, day{d}};
  if (!date.ok()) return std::nullopt;
  return date;
}

struct Rule {
  std::regex pattern;
  // Returns a candidate or nullopt when the match is not a real date.
  std::optional<Date> (*build)(const std::smatch&, const DateParseOptions&);
};

std::optional<Date> from_iso(const std::smatch& m, const DateParseOptions&) {
  return checked(std::stoi(m[1]), static_cast<unsigned>(std::stoi(m[2])),
                 static_cast<unsigned>(std::stoi(m[3])));
}

std::optional<Date> from_numeric(const std::smatch& m, const DateParseOptions& options) {
  const auto first = static_cast<unsigned>(std::stoi(m[1]));
  const auto second = static_cast<unsigned>(std::stoi(m[2]));
  const int y = expand_year(m[3]);
  bool day_first = !options.month_first;
  if (first > 12 && second <= 12) day_first = true;
  if (second > 12 && first <= 12) day_first = false;
  return day_first ? checked(y, second, first) : checked(y, first, second);
}

std::optional<Date> from_month_day_year(const std::smatch& m, const DateParseOptions&) {
  const auto mon = month_from_word(m[1]);
  if (!mon) return std::nullopt;
  return checked(expand_year(m[3]), *mon, static_cast<unsigned>(std::stoi(m[2])));
}

std::optional<Date> from_day_month_year(const std::smatch& m, const DateParseOptions&) {
  const auto mon = month_from_word(m[2]);
  if (!mon) return std::nullopt;
  return checked(expand_year(m[3]), *mon, static_cast<unsigned>(std::stoi(m[1])));
}

std::optional<Date> from_month_year(const std::smatch& m, const DateParseOptions&) {
  const auto mon = month_from_word(m[1]);
  if (!mon) return std::nullopt;
  return checked(std::stoi(m[2]), *mon, 1);
}

std::optional<Date> from_year(const std::smatch& m, const DateParseOptions&) {
  return checked(std::stoi(m[1]), 1, 1);
}

std::optional<Date> from_month_day(const std::smatch& m, const DateParseOptions& options) {
  if (!options.context_year) return std::nullopt;
  const auto mon = month_from_word(m[1]);
  if (!mon) return std::nullopt;
  return checked(*options.context_year, *mon, static_cast<unsigned>(std::stoi(m[2])));
}

std::optional<Date> from_day_month(const std::smatch& m, const DateParseOptions& options) {
  if (!options.context_year) return std::nullopt;
  const auto mon = month_from_word(m[2]);
  if (!mon) return std::nullopt;
  return checked(*options.context_year, *mon, static_cast<unsigned>(std::stoi(m[1])));
}

const std::vector<Rule>& rules() {
  static const auto flags = std::regex::ECMAScript | std::regex::icase;
  // Ordered most specific first; text consumed by a rule is masked before
  // the next rule runs, so "September 27, 2018" never also yields "2018".
  static const std::vector<Rule> table = {
      {std::regex(R"((?:^|[^\d])(\d{4})-(\d{1,2})-(\d{1,2})(?!\d))", flags), from_iso},
      {std::regex(R"((?:^|[^\d])(\d{1,2})[/.](\d{1,2})[/.](\d{4}|\d{2})(?!\d))", flags), from_numeric},
      {std::regex(R"(\b([a-z]{3,9})\.?\s+(\d{1,2})(?:st|nd|rd|th)?,?\s+(\d{4}|\d{2})(?!\d))", flags),
       from_month_day_year},
      {std::regex(R"((?:^|[^\d])(\d{1,2})(?:st|nd|rd|th)?\s+(?:of\s+)?([a-z]{3,9})\.?,?\s+(\d{4}|\d{2})(?!\d))",
                  flags),
       from_day_month_year},
      {std::regex(R"(\b([a-z]{3,9})\.?,?\s+(\d{4})(?!\d))", flags), from_month_year},
      {std::regex(R"((?:^|[^\d])(\d{3}0)'?s\b)", flags), from_year},
      {std::regex(R"((?:^|[^\d])(\d{4})(?!\d))", flags), from_year},
      {std::regex(R"(\b([a-z]{3,9})\.?\s+(\d{1,2})(?:st|nd|rd|th)?(?!\d))", flags), from_month_day},
      {std::regex(R"((?:^|[^\d])(\d{1,2})(?:st|nd|rd|th)?\s+(?:of\s+)?([a-z]{3,9})\b)", flags),
       from_day_month},
  };
  return table;
}

}  // namespace

Date make_date(int y, unsigned m, unsigned d) {
  Date date{year{y}, month{m}, day{d}};
  if (!date.ok()) {
    throw Error(ErrorKind::invalid_argument,
                "invalid calendar date " + std::to_string(y) + "-" + std::to_string(m) + "-" +
                    std::to_string(d));
  }
  return date;
}

std::string to_iso(const Date& date) {
  char buffer[16];
  std::snprintf(buffer, sizeof buffer, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buffer;
}

double years_between(const Date& from, const Date& to) {
  const auto days = (sys_days{to} - sys_days{from}).count();
  return static_cast<double>(days) / 365.25;
}

Date add_days(const Date& date, int days) {
  return Date{sys_days{date} + std::chrono::days{days}};
}

Date parse_date(std::string_view raw, const DateParseOptions& options) {
  std::string text(raw);
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw Error(ErrorKind::unparsable_date, "empty date string");
  }

  std::optional<Date> earliest;
  for (const auto& rule : rules()) {
    std::string masked = text;
    auto begin = text.cbegin();
    std::smatch match;
    auto flags = std::regex_constants::match_default;
    while (std::regex_search(begin, text.cend(), match, rule.pattern, flags)) {
      if (auto candidate = rule.build(match, options)) {
        if (!earliest || *candidate < *earliest) earliest = candidate;
      }
      // Matched text is consumed even when it is not a real date, so that
      // "31/02/2018" does not degrade into the bare year.
      const auto offset = static_cast<std::size_t>(match[0].first - text.cbegin());
      std::fill_n(masked.begin() + static_cast<std::ptrdiff_t>(offset), match.length(0), ' ');
      begin = match[0].second;
      if (match.length(0) == 0) {
        if (begin == text.cend()) break;
        ++begin;
      }
      flags = std::regex_constants::match_prev_avail;
    }
    text = std::move(masked);
  }

  if (!earliest) {
    throw Error(ErrorKind::unparsable_date, "no date rule matches '" + std::string(raw) + "'");
  }
  return *earliest;
}

}  // namespace ideotrack
