#pragma once

#include <cstdio>
#include <fstream>
#include <iostream>
#include <istream>
#include <set>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "memir/compile.hpp"
#include "memir/temporal.hpp"

namespace memir {
namespace detail {

// "2023-05-08" or "2023-05-08T13:56".
inline CivilDateTime parse_iso_timestamp(const std::string& text, size_t line) {
  int y = 0;
  unsigned mo = 0, d = 0, h = 0, mi = 0;
  int n = std::sscanf(text.c_str(), "%d-%u-%uT%u:%u", &y, &mo, &d, &h, &mi);
  auto date = n >= 3 ? CivilDate::make(y, mo, d) : std::nullopt;
  if (!date || (n != 3 && n != 5) || h > 23 || mi > 59)
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(line) + ": bad timestamp '" + text + "'");
  CivilDateTime out;
  out.date = *date;
  if (n == 5) {
    out.has_time = true;
    out.hour = h;
    out.minute = mi;
  }
  return out;
}

// "1:56 pm on 8 May, 2023".
inline CivilDateTime parse_session_datetime(const std::string& text) {
  unsigned h = 0, mi = 0, d = 0;
  int y = 0;
  char ampm[3] = {0};
  char month[16] = {0};
  int n = std::sscanf(text.c_str(), "%u:%u %2s on %u %15[A-Za-z], %d", &h, &mi, ampm, &d,
                      month, &y);
  std::string half = ampm;
  auto mo = month_from_name(month);
  if (n != 6 || !mo || h < 1 || h > 12 || mi > 59 || (half != "am" && half != "pm"))
    throw Error(ErrorCode::ParseError, "bad session datetime '" + text + "'");
  auto date = CivilDate::make(y, *mo, d);
  if (!date) throw Error(ErrorCode::ParseError, "bad session datetime '" + text + "'");
  CivilDateTime out;
  out.date = *date;
  out.has_time = true;
  out.hour = (h % 12) + (half == "pm" ? 12 : 0);
  out.minute = mi;
  return out;
}

inline void warn_unknown_field(const std::string& where, const std::string& key) {
  static std::set<std::string> warned;
  if (warned.insert(where + "/" + key).second)
    std::cerr << "warning: ignoring unknown field '" << key << "' in " << where << "\n";
}

// Image turns carry the caption inline so spans cover it.
inline std::string fold_caption(std::string text, const std::string& caption) {
  if (caption.empty()) return text;
  return text + " [image] " + caption;
}

} // namespace detail

// One JSON object per line: session, speaker, text, optional
// timestamp and image_caption. Session keys must be contiguous.
inline InteractionHistory load_jsonl_corpus(std::istream& in,
                                            std::string conversation_id = "") {
  InteractionHistory history;
  history.conversation_id = std::move(conversation_id);
  std::string raw;
  size_t line = 0;
  std::set<std::string> finished_sessions;
  std::string current_session;
  while (std::getline(in, raw)) {
    ++line;
    if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json rec = nlohmann::json::parse(raw, nullptr, false);
    if (rec.is_discarded() || !rec.is_object())
      throw Error(ErrorCode::ParseError,
                  "line " + std::to_string(line) + ": not a JSON object");
    Turn turn;
    try {
      turn.session_key = rec.at("session").get<std::string>();
      turn.speaker = rec.at("speaker").get<std::string>();
      turn.text = rec.at("text").get<std::string>();
      if (rec.contains("timestamp"))
        turn.timestamp =
            detail::parse_iso_timestamp(rec.at("timestamp").get<std::string>(), line);
      if (rec.contains("image_caption")) {
        turn.image_caption = rec.at("image_caption").get<std::string>();
        turn.text = detail::fold_caption(std::move(turn.text), *turn.image_caption);
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + e.what());
    }
    for (const auto& [key, value] : rec.items())
      if (key != "session" && key != "speaker" && key != "text" && key != "timestamp" &&
          key != "image_caption")
        detail::warn_unknown_field("jsonl corpus", key);

    if (turn.session_key != current_session) {
      if (finished_sessions.count(turn.session_key))
        throw Error(ErrorCode::ParseError,
                    "line " + std::to_string(line) + ": session '" + turn.session_key +
                        "' reappears after other sessions");
      if (!current_session.empty()) finished_sessions.insert(current_session);
      current_session = turn.session_key;
    }
    history.turns.push_back(std::move(turn));
  }
  return history;
}

// Single JSON object holding session_N arrays plus optional
// session_N_date_time strings; unknown fields are ignored.
inline InteractionHistory load_locomo_corpus(std::istream& in,
                                             std::string conversation_id = "") {
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object())
    throw Error(ErrorCode::ParseError, "line 1: not a JSON object");

  InteractionHistory history;
  history.conversation_id = std::move(conversation_id);
  if (doc.contains("sample_id") && doc.at("sample_id").is_string())
    history.conversation_id = doc.at("sample_id").get<std::string>();

  std::vector<std::pair<unsigned long, std::string>> sessions;
  for (const auto& [key, value] : doc.items()) {
    if (key.rfind("session_", 0) != 0) {
      if (key != "sample_id") detail::warn_unknown_field("locomo corpus", key);
      continue;
    }
    std::string tail = key.substr(8);
    char* end = nullptr;
    unsigned long n = std::strtoul(tail.c_str(), &end, 10);
    if (end == tail.c_str()) {
      detail::warn_unknown_field("locomo corpus", key);
      continue;
    }
    if (*end == '\0') sessions.emplace_back(n, key);
  }
  std::sort(sessions.begin(), sessions.end());

  for (const auto& [number, key] : sessions) {
    const nlohmann::json& turns = doc.at(key);
    if (!turns.is_array())
      throw Error(ErrorCode::ParseError, "'" + key + "' is not an array");
    std::optional<CivilDateTime> stamp;
    std::string stamp_key = key + "_date_time";
    if (doc.contains(stamp_key))
      stamp = detail::parse_session_datetime(doc.at(stamp_key).get<std::string>());
    for (const nlohmann::json& rec : turns) {
      Turn turn;
      try {
        turn.session_key = key;
        turn.speaker = rec.at("speaker").get<std::string>();
        turn.text = rec.at("text").get<std::string>();
        for (const char* caption_key : {"blip_caption", "image_caption", "caption"}) {
          if (rec.contains(caption_key) && rec.at(caption_key).is_string()) {
            turn.image_caption = rec.at(caption_key).get<std::string>();
            turn.text = detail::fold_caption(std::move(turn.text), *turn.image_caption);
            break;
          }
        }
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, "in '" + key + "': " + e.what());
      }
      turn.timestamp = stamp;
      history.turns.push_back(std::move(turn));
    }
  }
  return history;
}

// Sniffs the container: a whole-file JSON object with session_N keys
// is LoCoMo shaped, anything else is read as JSONL.
inline InteractionHistory load_corpus_stream(std::istream& in,
                                             std::string conversation_id = "") {
  std::ostringstream buffer;
  buffer << in.rdbuf();
  std::string text = buffer.str();
  nlohmann::json whole = nlohmann::json::parse(text, nullptr, false);
  if (!whole.is_discarded() && whole.is_object()) {
    for (const auto& [key, value] : whole.items()) {
      if (key.rfind("session_", 0) == 0) {
        std::istringstream again(text);
        return load_locomo_corpus(again, std::move(conversation_id));
      }
    }
  }
  std::istringstream again(text);
  return load_jsonl_corpus(again, std::move(conversation_id));
}

inline InteractionHistory load_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::string stem = path;
  if (size_t slash = stem.find_last_of('/'); slash != std::string::npos)
    stem = stem.substr(slash + 1);
  if (size_t dot = stem.find_last_of('.'); dot != std::string::npos) stem.resize(dot);
  return load_corpus_stream(in, stem);
}

} // namespace memir
