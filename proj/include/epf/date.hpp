#pragma once

#include <chrono>
#include <compare>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "epf/error.hpp"

namespace epf {

// Calendar day, stored as days since 1970-01-01. Daily panels index rows by Date.
class Date {
 public:
  Date() : serial_(0) {}
  explicit Date(int serial) : serial_(serial) {}

  static Date from_ymd(int y, unsigned m, unsigned d) {
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    require(ymd.ok(), ErrorCode::NonNumericValue,
            "invalid calendar date " + std::to_string(y) + "-" + std::to_string(m) + "-" + std::to_string(d));
    return Date(static_cast<int>(std::chrono::sys_days{ymd}.time_since_epoch().count()));
  }

  // Parses strict ISO-8601 "YYYY-MM-DD".
  static std::optional<Date> parse(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    auto digits = [](std::string_view t) {
      for (char c : t)
        if (c < '0' || c > '9') return false;
      return true;
    };
    if (!digits(s.substr(0, 4)) || !digits(s.substr(5, 2)) || !digits(s.substr(8, 2))) return std::nullopt;
    int y = (s[0] - '0') * 1000 + (s[1] - '0') * 100 + (s[2] - '0') * 10 + (s[3] - '0');
    unsigned m = (s[5] - '0') * 10u + (s[6] - '0');
    unsigned d = (s[8] - '0') * 10u + (s[9] - '0');
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) return std::nullopt;
    return Date(static_cast<int>(std::chrono::sys_days{ymd}.time_since_epoch().count()));
  }

  int serial() const { return serial_; }

  int year() const { return static_cast<int>(ymd().year()); }
  int month() const { return static_cast<int>(static_cast<unsigned>(ymd().month())); }
  int day() const { return static_cast<int>(static_cast<unsigned>(ymd().day())); }

  // 1 = Monday .. 7 = Sunday.
  int iso_weekday() const {
    using namespace std::chrono;
    return static_cast<int>(weekday{sys_days{days{serial_}}}.iso_encoding());
  }
  bool is_saturday() const { return iso_weekday() == 6; }
  bool is_sunday() const { return iso_weekday() == 7; }

  std::string to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year(), month(), day());
    return buf;
  }

  Date operator+(int days) const { return Date(serial_ + days); }
  Date operator-(int days) const { return Date(serial_ - days); }
  int operator-(Date other) const { return serial_ - other.serial_; }
  Date& operator++() {
    ++serial_;
    return *this;
  }
  auto operator<=>(const Date&) const = default;

 private:
  std::chrono::year_month_day ymd() const {
    using namespace std::chrono;
    return year_month_day{sys_days{days{serial_}}};
  }
  int serial_;
};

inline Date parse_date_or_fail(std::string_view s, const std::string& context) {
  auto d = Date::parse(s);
  require(d.has_value(), ErrorCode::NonNumericValue, context + ": bad date '" + std::string(s) + "'");
  return *d;
}

// Closed interval of calendar days.
struct DateRange {
  Date start;
  Date end;

  int length() const { return end - start + 1; }
  bool contains(Date d) const { return d >= start && d <= end; }
  bool contains(const DateRange& r) const { return r.start >= start && r.end <= end; }
};

inline std::vector<Date> date_sequence(Date start, int n) {
  std::vector<Date> out;
  out.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(start + i);
  return out;
}

}  // namespace epf
