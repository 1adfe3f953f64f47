#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace gostat {

enum class DatePrecision { Year, Month, Day };

// Calendar date that remembers how precisely it was written. Partial dates
// are filled for ordering: year-only -> July 1st, year-month -> the 15th.
class Date {
 public:
  Date() = default;
  Date(int year, unsigned month, unsigned day, DatePrecision precision = DatePrecision::Day);

  // Accepts "YYYY", "YYYY-MM", "YYYY-MM-DD". Anything after the leading date
  // (e.g. SGF ranges "2017-03-15,16") is ignored. Returns nullopt on garbage.
  static std::optional<Date> parse(std::string_view text);
  static Date from_days(int days_since_epoch);

  int year() const { return year_; }
  unsigned month() const { return month_; }
  unsigned day() const { return day_; }
  DatePrecision precision() const { return precision_; }

  int days() const;  // days since 1970-01-01 of the filled date
  double fractional_year() const;

  // Text at the original precision.
  std::string to_string() const;
  // Always YYYY-MM-DD.
  std::string iso() const;

  bool operator==(const Date& other) const = default;
  std::strong_ordering operator<=>(const Date& other) const;

 private:
  int year_ = 1970;
  unsigned month_ = 1;
  unsigned day_ = 1;
  DatePrecision precision_ = DatePrecision::Day;
};

// Whole days between two dates (b - a).
inline int days_between(const Date& a, const Date& b) { return b.days() - a.days(); }

}  // namespace gostat
