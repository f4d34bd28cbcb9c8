#pragma once
// Civil calendar values used for temporal anchoring. Intervals are
// inclusive on both ends and rendered in ISO form.

#include <chrono>
#include <compare>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace memir {

struct CivilDate {
  int year = 0;
  unsigned month = 1; // 1..12
  unsigned day = 1;   // 1..31

  auto operator<=>(const CivilDate&) const = default;

  static std::optional<CivilDate> make(int year, unsigned month, unsigned day) {
    std::chrono::year_month_day ymd{std::chrono::year{year},
                                    std::chrono::month{month},
                                    std::chrono::day{day}};
    if (!ymd.ok()) return std::nullopt;
    return CivilDate{year, month, day};
  }

  std::string iso() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", year, month, day);
    return buf;
  }

  static std::optional<CivilDate> parse_iso(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    auto digits = [&](size_t begin, size_t len, unsigned& out) {
      out = 0;
      for (size_t i = begin; i < begin + len; ++i) {
        if (text[i] < '0' || text[i] > '9') return false;
        out = out * 10 + static_cast<unsigned>(text[i] - '0');
      }
      return true;
    };
    unsigned y, m, d;
    if (!digits(0, 4, y) || !digits(5, 2, m) || !digits(8, 2, d)) return std::nullopt;
    return make(static_cast<int>(y), m, d);
  }

  std::chrono::sys_days to_days() const {
    return std::chrono::sys_days{std::chrono::year_month_day{
        std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}}};
  }

  static CivilDate from_days(std::chrono::sys_days days) {
    std::chrono::year_month_day ymd{days};
    return CivilDate{static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                     static_cast<unsigned>(ymd.day())};
  }

  CivilDate plus_days(int n) const {
    return from_days(to_days() + std::chrono::days{n});
  }

  // 0 = Sunday ... 6 = Saturday (c_encoding of std::chrono::weekday).
  unsigned weekday_index() const {
    return std::chrono::weekday{to_days()}.c_encoding();
  }

  static CivilDate month_start(int year, unsigned month) {
    return CivilDate{year, month, 1};
  }

  static CivilDate month_end(int year, unsigned month) {
    std::chrono::year_month_day_last last{std::chrono::year{year},
                                          std::chrono::month_day_last{std::chrono::month{month}}};
    return CivilDate{year, month, static_cast<unsigned>(last.day())};
  }

  // Calendar-month shift with day clamped to the target month's length.
  CivilDate plus_months(int n) const {
    int total = year * 12 + static_cast<int>(month) - 1 + n;
    int y = total / 12;
    int m = total % 12;
    if (m < 0) {
      m += 12;
      y -= 1;
    }
    CivilDate end = month_end(y, static_cast<unsigned>(m + 1));
    unsigned d = day < end.day ? day : end.day;
    return CivilDate{y, static_cast<unsigned>(m + 1), d};
  }
};

// Inclusive calendar interval; a single day has start == end.
struct DateInterval {
  CivilDate start;
  CivilDate end;

  auto operator<=>(const DateInterval&) const = default;

  std::string render() const {
    if (start == end) return start.iso();
    return start.iso() + ".." + end.iso();
  }

  static std::optional<DateInterval> parse(std::string_view text) {
    size_t dots = text.find("..");
    if (dots == std::string_view::npos) {
      auto d = CivilDate::parse_iso(text);
      if (!d) return std::nullopt;
      return DateInterval{*d, *d};
    }
    auto a = CivilDate::parse_iso(text.substr(0, dots));
    auto b = CivilDate::parse_iso(text.substr(dots + 2));
    if (!a || !b || *b < *a) return std::nullopt;
    return DateInterval{*a, *b};
  }

  static DateInterval single(CivilDate d) { return DateInterval{d, d}; }
};

// Date with optional wall-clock time (minute granularity).
struct CivilDateTime {
  CivilDate date;
  bool has_time = false;
  unsigned hour = 0;
  unsigned minute = 0;

  auto operator<=>(const CivilDateTime&) const = default;

  std::string iso() const {
    if (!has_time) return date.iso();
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%sT%02u:%02u", date.iso().c_str(), hour, minute);
    return buf;
  }

  static std::optional<CivilDateTime> parse_iso(std::string_view text) {
    if (text.size() == 10) {
      auto d = CivilDate::parse_iso(text);
      if (!d) return std::nullopt;
      return CivilDateTime{*d, false, 0, 0};
    }
    if (text.size() == 16 && text[10] == 'T' && text[13] == ':') {
      auto d = CivilDate::parse_iso(text.substr(0, 10));
      if (!d) return std::nullopt;
      auto num = [&](size_t at) -> int {
        char a = text[at], b = text[at + 1];
        if (a < '0' || a > '9' || b < '0' || b > '9') return -1;
        return (a - '0') * 10 + (b - '0');
      };
      int h = num(11), m = num(14);
      if (h < 0 || h > 23 || m < 0 || m > 59) return std::nullopt;
      return CivilDateTime{*d, true, static_cast<unsigned>(h), static_cast<unsigned>(m)};
    }
    return std::nullopt;
  }
};

} // namespace memir
