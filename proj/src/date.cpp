#include "gostat/date.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <stdexcept>

namespace gostat {

namespace {

std::optional<int> read_int(std::string_view text, std::size_t& pos, std::size_t min_digits,
                            std::size_t max_digits) {
  std::size_t start = pos;
  while (pos < text.size() && pos - start < max_digits && text[pos] >= '0' && text[pos] <= '9')
    ++pos;
  if (pos - start < min_digits) return std::nullopt;
  int value = 0;
  std::from_chars(text.data() + start, text.data() + pos, value);
  return value;
}

}  // namespace

Date::Date(int year, unsigned month, unsigned day, DatePrecision precision)
    : year_(year), month_(month), day_(day), precision_(precision) {
  if (precision_ == DatePrecision::Year) {
    month_ = 7;
    day_ = 1;
  } else if (precision_ == DatePrecision::Month) {
    day_ = 15;
  }
  std::chrono::year_month_day ymd{std::chrono::year{year_}, std::chrono::month{month_},
                                  std::chrono::day{day_}};
  if (!ymd.ok()) throw std::invalid_argument("invalid calendar date");
}

std::optional<Date> Date::parse(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  std::size_t pos = 0;
  auto year = read_int(text, pos, 4, 4);
  if (!year) return std::nullopt;
  auto at_sep = [&] { return pos < text.size() && (text[pos] == '-' || text[pos] == '/'); };
  auto ends_here = [&] {
    return pos >= text.size() || !(text[pos] >= '0' && text[pos] <= '9');
  };
  if (!at_sep()) {
    if (!ends_here()) return std::nullopt;
    return Date(*year, 7, 1, DatePrecision::Year);
  }
  ++pos;
  auto month = read_int(text, pos, 1, 2);
  if (!month || *month < 1 || *month > 12) return std::nullopt;
  if (!at_sep()) {
    if (!ends_here()) return std::nullopt;
    return Date(*year, static_cast<unsigned>(*month), 15, DatePrecision::Month);
  }
  ++pos;
  auto day = read_int(text, pos, 1, 2);
  if (!day || !ends_here()) return std::nullopt;
  std::chrono::year_month_day ymd{std::chrono::year{*year},
                                  std::chrono::month{static_cast<unsigned>(*month)},
                                  std::chrono::day{static_cast<unsigned>(*day)}};
  if (!ymd.ok()) return std::nullopt;
  return Date(*year, static_cast<unsigned>(*month), static_cast<unsigned>(*day));
}

Date Date::from_days(int days_since_epoch) {
  std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{days_since_epoch}}};
  return Date(static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
              static_cast<unsigned>(ymd.day()));
}

int Date::days() const {
  std::chrono::sys_days d{std::chrono::year{year_} / std::chrono::month{month_} /
                          std::chrono::day{day_}};
  return static_cast<int>(d.time_since_epoch().count());
}

double Date::fractional_year() const {
  int jan1 = Date(year_, 1, 1).days();
  int next = Date(year_ + 1, 1, 1).days();
  return year_ + static_cast<double>(days() - jan1) / (next - jan1);
}

std::string Date::to_string() const {
  char buf[16];
  switch (precision_) {
    case DatePrecision::Year:
      std::snprintf(buf, sizeof buf, "%04d", year_);
      break;
    case DatePrecision::Month:
      std::snprintf(buf, sizeof buf, "%04d-%02u", year_, month_);
      break;
    case DatePrecision::Day:
      std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year_, month_, day_);
      break;
  }
  return buf;
}

std::string Date::iso() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year_, month_, day_);
  return buf;
}

std::strong_ordering Date::operator<=>(const Date& other) const {
  if (auto c = days() <=> other.days(); c != 0) return c;
  return static_cast<int>(precision_) <=> static_cast<int>(other.precision_);
}

}  // namespace gostat
