#pragma once
// Temporal expression matching and normalization. A hand-rolled token
// matcher covers the date shapes that show up in chat transcripts:
// absolute dates, month and year references, deictic expressions
// resolved against the session date, and clock times. Deictic forms
// stay unnormalized when no reference date is known; bare weekday
// names are never normalized.

#include <cctype>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "memir/dates.hpp"
#include "memir/text.hpp"

namespace memir {

struct TimeMatch {
  size_t begin = 0; // byte range of the surface form in the source text
  size_t end = 0;
  std::string surface;
  std::optional<DateInterval> interval; // absent when unresolvable
  bool relative = false; // reading depends on the reference date
};

// Rendering used for time view keys and fact records.
inline std::string render_time(const std::string& surface,
                               const std::optional<DateInterval>& interval) {
  if (!interval) return surface;
  return surface + " [" + interval->render() + "]";
}

namespace detail {

inline std::optional<unsigned> month_from_name(std::string_view word) {
  std::string w = to_lower_ascii(word);
  static const std::pair<const char*, unsigned> names[] = {
      {"january", 1},  {"jan", 1},  {"february", 2}, {"feb", 2},
      {"march", 3},    {"mar", 3},  {"april", 4},    {"apr", 4},
      {"may", 5},      {"june", 6}, {"jun", 6},      {"july", 7},
      {"jul", 7},      {"august", 8}, {"aug", 8},    {"september", 9},
      {"sept", 9},     {"sep", 9},  {"october", 10}, {"oct", 10},
      {"november", 11}, {"nov", 11}, {"december", 12}, {"dec", 12},
  };
  for (const auto& [name, number] : names)
    if (w == name) return number;
  return std::nullopt;
}

// c_encoding: 0 = Sunday.
inline std::optional<unsigned> weekday_from_name(std::string_view word) {
  std::string w = to_lower_ascii(word);
  static const std::pair<const char*, unsigned> names[] = {
      {"sunday", 0},   {"monday", 1}, {"tuesday", 2}, {"wednesday", 3},
      {"thursday", 4}, {"friday", 5}, {"saturday", 6},
  };
  for (const auto& [name, number] : names)
    if (w == name) return number;
  return std::nullopt;
}

inline std::optional<int> number_word(std::string_view word) {
  std::string w = to_lower_ascii(word);
  static const std::pair<const char*, int> names[] = {
      {"a", 1},    {"an", 1},   {"one", 1},   {"two", 2},  {"three", 3},
      {"four", 4}, {"five", 5}, {"six", 6},   {"seven", 7}, {"eight", 8},
      {"nine", 9}, {"ten", 10}, {"eleven", 11}, {"twelve", 12},
  };
  for (const auto& [name, number] : names)
    if (w == name) return number;
  return std::nullopt;
}

inline bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (unsigned char c : s)
    if (!std::isdigit(c)) return false;
  return true;
}

// "12th" -> 12; plain digit runs pass through.
inline std::optional<unsigned> day_number(std::string_view token) {
  std::string_view digits = token;
  if (digits.size() > 2) {
    std::string tail = to_lower_ascii(digits.substr(digits.size() - 2));
    if (tail == "st" || tail == "nd" || tail == "rd" || tail == "th")
      digits = digits.substr(0, digits.size() - 2);
  }
  if (!all_digits(digits) || digits.size() > 2) return std::nullopt;
  unsigned value = static_cast<unsigned>(std::atoi(std::string(digits).c_str()));
  if (value < 1 || value > 31) return std::nullopt;
  return value;
}

inline std::optional<int> year_number(std::string_view token) {
  if (token.size() != 4 || !all_digits(token)) return std::nullopt;
  int value = std::atoi(std::string(token).c_str());
  if (value < 1900 || value > 2099) return std::nullopt;
  return value;
}

// Tokens belong to one expression only when separated by light
// punctuation; anything else breaks adjacency.
inline bool gap_ok(std::string_view text, const Token& a, const Token& b) {
  if (b.begin < a.end || b.begin - a.end > 2) return false;
  for (size_t i = a.end; i < b.begin; ++i) {
    char c = text[i];
    if (c != ' ' && c != ',' && c != '.') return false;
  }
  return true;
}

inline bool joined_by(std::string_view text, const Token& a, const Token& b, char sep) {
  return b.begin == a.end + 1 && text[a.end] == sep;
}

// Monday-start week block containing the reference day.
inline CivilDate week_start(CivilDate ref) {
  unsigned since_monday = (ref.weekday_index() + 6) % 7;
  return ref.plus_days(-static_cast<int>(since_monday));
}

} // namespace detail

// Scans left to right, trying the most specific pattern first at each
// token, so "12 May 2023" wins over its "May 2023" suffix.
inline std::vector<TimeMatch> match_time_expressions(
    std::string_view text, std::optional<CivilDate> reference) {
  using namespace detail;
  std::vector<Token> toks = tokenize_with_offsets(text);
  std::vector<TimeMatch> out;
  auto lower = [&](size_t i) { return to_lower_ascii(toks[i].text); };
  auto emit = [&](size_t from_tok, size_t to_tok, std::optional<DateInterval> interval,
                  bool relative) {
    size_t begin = toks[from_tok].begin;
    size_t end = toks[to_tok].end;
    out.push_back(TimeMatch{begin, end, std::string(text.substr(begin, end - begin)),
                            std::move(interval), relative});
    return to_tok + 1;
  };

  size_t i = 0;
  while (i < toks.size()) {
    const size_t n = toks.size();

    // ISO date: 2023-05-12.
    if (i + 2 < n && year_number(toks[i].text) && all_digits(toks[i + 1].text) &&
        toks[i + 1].text.size() == 2 && all_digits(toks[i + 2].text) &&
        toks[i + 2].text.size() == 2 && joined_by(text, toks[i], toks[i + 1], '-') &&
        joined_by(text, toks[i + 1], toks[i + 2], '-')) {
      auto date = CivilDate::make(*year_number(toks[i].text),
                                  static_cast<unsigned>(std::atoi(toks[i + 1].text.c_str())),
                                  static_cast<unsigned>(std::atoi(toks[i + 2].text.c_str())));
      if (date) {
        i = emit(i, i + 2, DateInterval::single(*date), false);
        continue;
      }
    }

    // Day Month Year: "12 May 2023", "8 May, 2023".
    if (i + 2 < n && day_number(toks[i].text) && month_from_name(toks[i + 1].text) &&
        year_number(toks[i + 2].text) && gap_ok(text, toks[i], toks[i + 1]) &&
        gap_ok(text, toks[i + 1], toks[i + 2])) {
      auto date = CivilDate::make(*year_number(toks[i + 2].text),
                                  *month_from_name(toks[i + 1].text),
                                  *day_number(toks[i].text));
      if (date) {
        i = emit(i, i + 2, DateInterval::single(*date), false);
        continue;
      }
    }

    // Month Day Year: "May 12, 2023".
    if (i + 2 < n && month_from_name(toks[i].text) && day_number(toks[i + 1].text) &&
        year_number(toks[i + 2].text) && gap_ok(text, toks[i], toks[i + 1]) &&
        gap_ok(text, toks[i + 1], toks[i + 2])) {
      auto date = CivilDate::make(*year_number(toks[i + 2].text),
                                  *month_from_name(toks[i].text),
                                  *day_number(toks[i + 1].text));
      if (date) {
        i = emit(i, i + 2, DateInterval::single(*date), false);
        continue;
      }
    }

    // Month Year: "May 2023".
    if (i + 1 < n && month_from_name(toks[i].text) && year_number(toks[i + 1].text) &&
        gap_ok(text, toks[i], toks[i + 1])) {
      int year = *year_number(toks[i + 1].text);
      unsigned month = *month_from_name(toks[i].text);
      i = emit(i, i + 1,
               DateInterval{CivilDate::month_start(year, month),
                            CivilDate::month_end(year, month)},
               false);
      continue;
    }

    // Bare year after a temporal preposition: "in 2021", "since 2019".
    if (i > 0 && year_number(toks[i].text)) {
      std::string prev = lower(i - 1);
      if (prev == "in" || prev == "since" || prev == "during" || prev == "until" ||
          prev == "by" || prev == "from") {
        int year = *year_number(toks[i].text);
        i = emit(i, i,
                 DateInterval{*CivilDate::make(year, 1, 1), *CivilDate::make(year, 12, 31)},
                 false);
        continue;
      }
    }

    // Deictic block: last/next/this + unit or weekday.
    std::string head = lower(i);
    if (head == "last" || head == "next" || head == "this") {
      int dir = head == "last" ? -1 : head == "next" ? 1 : 0;
      if (i + 1 < n && gap_ok(text, toks[i], toks[i + 1])) {
        std::string unit = lower(i + 1);
        std::optional<DateInterval> interval;
        bool matched = false;
        if (unit == "week") {
          matched = true;
          if (reference) {
            CivilDate ws = week_start(*reference).plus_days(dir * 7);
            interval = DateInterval{ws, ws.plus_days(6)};
          }
        } else if (unit == "weekend") {
          matched = true;
          if (reference) {
            CivilDate ws = week_start(*reference).plus_days(dir * 7);
            interval = DateInterval{ws.plus_days(5), ws.plus_days(6)};
          }
        } else if (unit == "month") {
          matched = true;
          if (reference) {
            CivilDate anchor = reference->plus_months(dir);
            interval = DateInterval{CivilDate::month_start(anchor.year, anchor.month),
                                    CivilDate::month_end(anchor.year, anchor.month)};
          }
        } else if (unit == "year") {
          matched = true;
          if (reference) {
            int year = reference->year + dir;
            interval = DateInterval{*CivilDate::make(year, 1, 1), *CivilDate::make(year, 12, 31)};
          }
        } else if (auto wd = weekday_from_name(unit)) {
          matched = true;
          if (reference) {
            CivilDate day{};
            if (dir == 0) {
              day = week_start(*reference).plus_days(static_cast<int>((*wd + 6) % 7));
            } else {
              unsigned ref_wd = reference->weekday_index();
              int delta = dir > 0 ? static_cast<int>((*wd - ref_wd + 7) % 7)
                                  : -static_cast<int>((ref_wd - *wd + 7) % 7);
              if (delta == 0) delta = dir * 7;
              day = reference->plus_days(delta);
            }
            interval = DateInterval::single(day);
          }
        }
        if (matched) {
          i = emit(i, i + 1, std::move(interval), true);
          continue;
        }
      }
    }

    // "N days ago" and word-number variants.
    {
      std::optional<int> count;
      if (all_digits(toks[i].text) && toks[i].text.size() <= 3)
        count = std::atoi(toks[i].text.c_str());
      else
        count = number_word(toks[i].text);
      if (count && *count > 0 && i + 2 < n && gap_ok(text, toks[i], toks[i + 1]) &&
          gap_ok(text, toks[i + 1], toks[i + 2]) && lower(i + 2) == "ago") {
        std::string unit = lower(i + 1);
        std::optional<DateInterval> interval;
        bool matched = true;
        if (unit == "day" || unit == "days") {
          if (reference) interval = DateInterval::single(reference->plus_days(-*count));
        } else if (unit == "week" || unit == "weeks") {
          if (reference) interval = DateInterval::single(reference->plus_days(-7 * *count));
        } else if (unit == "month" || unit == "months") {
          if (reference) interval = DateInterval::single(reference->plus_months(-*count));
        } else if (unit == "year" || unit == "years") {
          if (reference) interval = DateInterval::single(reference->plus_months(-12 * *count));
        } else {
          matched = false;
        }
        if (matched) {
          i = emit(i, i + 2, std::move(interval), true);
          continue;
        }
      }
    }

    // Single-token deictics.
    if (head == "yesterday" || head == "today" || head == "tomorrow") {
      std::optional<DateInterval> interval;
      if (reference) {
        int shift = head == "yesterday" ? -1 : head == "tomorrow" ? 1 : 0;
        interval = DateInterval::single(reference->plus_days(shift));
      }
      i = emit(i, i, std::move(interval), true);
      continue;
    }

    // Clock times resolve to the session day; the reading itself stays
    // in the surface form.
    {
      std::string tok = head;
      bool fused_meridiem = tok.size() >= 3 && tok.size() <= 4 &&
                            (tok.substr(tok.size() - 2) == "am" || tok.substr(tok.size() - 2) == "pm") &&
                            all_digits(tok.substr(0, tok.size() - 2));
      if (fused_meridiem) {
        std::optional<DateInterval> interval;
        if (reference) interval = DateInterval::single(*reference);
        i = emit(i, i, std::move(interval), true);
        continue;
      }
      bool hour_token = all_digits(toks[i].text) && toks[i].text.size() <= 2 &&
                        std::atoi(toks[i].text.c_str()) >= 1 && std::atoi(toks[i].text.c_str()) <= 12;
      if (hour_token && i + 1 < n) {
        size_t last = 0;
        if (joined_by(text, toks[i], toks[i + 1], ':') && all_digits(toks[i + 1].text) &&
            toks[i + 1].text.size() == 2) {
          last = i + 1;
          if (i + 2 < n && (lower(i + 2) == "am" || lower(i + 2) == "pm") &&
              gap_ok(text, toks[i + 1], toks[i + 2]))
            last = i + 2;
        } else if ((lower(i + 1) == "am" || lower(i + 1) == "pm") &&
                   gap_ok(text, toks[i], toks[i + 1])) {
          last = i + 1;
        }
        if (last != 0) {
          std::optional<DateInterval> interval;
          if (reference) interval = DateInterval::single(*reference);
          i = emit(i, last, std::move(interval), true);
          continue;
        }
      }
    }

    // Bare weekday names are kept as cues but never resolved.
    if (weekday_from_name(toks[i].text)) {
      i = emit(i, i, std::nullopt, true);
      continue;
    }

    ++i;
  }
  return out;
}

// Rewrites temporal expressions into their time-key reading, giving
// the sparse routes lexical overlap with stored time keys. Matches are
// replaced right to left so byte offsets stay valid.
inline std::string normalize_temporal_query(std::string_view query,
                                            std::optional<CivilDate> reference) {
  std::vector<TimeMatch> matches = match_time_expressions(query, reference);
  std::string rewritten(query);
  for (auto it = matches.rbegin(); it != matches.rend(); ++it) {
    if (!it->interval) continue;
    rewritten.replace(it->begin, it->end - it->begin, render_time(it->surface, it->interval));
  }
  return rewritten;
}

} // namespace memir
