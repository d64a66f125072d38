#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace ideotrack {

/// Calendar date at day precision (UTC).
using Date = std::chrono::year_month_day;

Date make_date(int year, unsigned month, unsigned day);

/// "YYYY-MM-DD".
std::string to_iso(const Date& date);

/// Signed difference in fractional years (days / 365.25).
double years_between(const Date& from, const Date& to);

Date add_days(const Date& date, int days);

struct DateParseOptions {
  /// Interpret numerically ambiguous dates ("03/04/2018") as month-first.
  bool month_first = false;
  /// Year implied by surrounding context, used for "Month D" inputs.
  std::optional<int> context_year;
};

/// Rule-based extraction of a date from free text.
///
/// Recognised forms: ISO "YYYY-MM-DD", D/M/YYYY, M/D/YYYY, D/M/YY,
/// "Month D, YYYY", "D Mon YYYY", "Month YYYY", "1990s", "YYYY", and
/// "Month D" / "D Month" when a context year is supplied. Numeric fields
/// that cannot be a month decide the ordering; otherwise day-first unless
/// `month_first` is set. Partial dates resolve to the earliest day they
/// cover, and when the text holds several dates the earliest wins.
/// Throws Error(unparsable_date) when no rule yields a valid date.
Date parse_date(std::string_view raw, const DateParseOptions& options = {});

}  // namespace ideotrack
