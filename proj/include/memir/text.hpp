#pragma once
// Text primitives shared by compilation and retrieval: tokenization at
// word boundaries, the function-word table behind query rewriting, the
// event-verb list behind pivot extraction, and the sentence splitter.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "memir/errors.hpp"

namespace memir {

inline bool is_word_byte(unsigned char c) {
  // Letters, digits, and any non-ASCII byte count as word content;
  // apostrophes join contractions ("don't" stays one token).
  return std::isalnum(c) != 0 || c >= 0x80 || c == '\'';
}

inline std::string to_lower_ascii(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (unsigned char c : text)
    out.push_back(static_cast<char>(std::tolower(c)));
  return out;
}

struct Token {
  std::string text; // original casing
  size_t begin = 0; // byte offset into the source
  size_t end = 0;   // one past the last byte
};

inline std::vector<Token> tokenize_with_offsets(std::string_view text) {
  std::vector<Token> tokens;
  size_t i = 0;
  while (i < text.size()) {
    if (!is_word_byte(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    size_t begin = i;
    while (i < text.size() && is_word_byte(static_cast<unsigned char>(text[i])))
      ++i;
    // Trim apostrophes that only quote the token rather than join it.
    size_t b = begin, e = i;
    while (b < e && text[b] == '\'') ++b;
    while (e > b && text[e - 1] == '\'') --e;
    if (b < e) tokens.push_back(Token{std::string(text.substr(b, e - b)), b, e});
  }
  return tokens;
}

// Lowercased word tokens; the index tokenization (no stemming).
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  for (const Token& t : tokenize_with_offsets(text))
    out.push_back(to_lower_ascii(t.text));
  return out;
}

namespace detail {

inline const char* kFunctionWords =
    // articles and determiners
    "a an the this that these those each every either neither some any "
    "no not such own same other another both all few more most several "
    // pronouns
    "i you he she it we they me him her us them my your his its our "
    "their mine yours hers ours theirs myself yourself himself herself "
    "itself ourselves yourselves themselves who whom whose which what "
    "whatever whoever something anything nothing everything someone "
    "anyone everyone nobody somebody everybody "
    // auxiliaries and copulas
    "am is are was were be been being do does did doing have has had "
    "having will would shall should can could may might must ought "
    "need dare used "
    // wh-words and subordinators
    "when where why how whether while if because since although though "
    "unless until so than as "
    // prepositions
    "of in on at by for with about against between among into through "
    "during before after above below to from up down out off over "
    "under again further then once onto upon within without across "
    "behind beyond near beside besides toward towards along around "
    "inside outside per via "
    // conjunctions and particles
    "and but or nor yet also too very just only even still ever never "
    "here there now "
    // contraction tails left by tokenization
    "s t d ll m re ve don didn doesn isn aren wasn weren won wouldn "
    "couldn shouldn hasn haven hadn mustn mightn needn let lets im ive "
    "id youre youve theyre weve hes shes thats whats wheres whens "
    "theres heres ";

inline const char* kEventVerbs =
    // base and inflected forms are listed explicitly; no stemming
    "visit visits visited visiting "
    "finish finishes finished finishing "
    "start starts started starting "
    "complete completes completed completing "
    "win wins won winning "
    "lose loses lost losing "
    "move moves moved moving "
    "marry marries married marrying "
    "graduate graduates graduated graduating "
    "apply applies applied applying "
    "attend attends attended attending "
    "create creates created creating "
    "write writes wrote written writing "
    "build builds built building "
    "plan plans planned planning "
    "meet meets met meeting "
    "join joins joined joining "
    "launch launches launched launching "
    "publish publishes published publishing "
    "buy buys bought buying "
    "sell sells sold selling "
    "travel travels traveled travelled traveling travelling "
    "return returns returned returning "
    "organize organizes organized organizing "
    "host hosts hosted hosting "
    "sign signs signed signing "
    "book books booked booking "
    "schedule schedules scheduled scheduling "
    "reschedule reschedules rescheduled rescheduling "
    "adopt adopts adopted adopting "
    "plant plants planted planting "
    "open opens opened opening "
    "enroll enrolls enrolled enrolling "
    "perform performs performed performing "
    "record records recorded recording "
    "release releases released releasing "
    "submit submits submitted submitting "
    "earn earns earned earning "
    "receive receives received receiving "
    "celebrate celebrates celebrated celebrating "
    "cancel cancels canceled cancelled canceling cancelling ";

inline std::unordered_set<std::string> split_word_list(std::string_view words) {
  std::unordered_set<std::string> set;
  std::istringstream in{std::string(words)};
  std::string w;
  while (in >> w) set.insert(w);
  return set;
}

} // namespace detail

// A lowercase word set; membership checks fold case.
class WordTable {
public:
  explicit WordTable(std::unordered_set<std::string> words) : words_(std::move(words)) {}

  bool contains(std::string_view word) const {
    return words_.count(to_lower_ascii(word)) > 0;
  }

  size_t size() const { return words_.size(); }

  // One word per whitespace-separated field; '#' starts a comment line.
  static WordTable load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open word table '" + path + "'");
    std::unordered_set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line[0] == '#') continue;
      std::istringstream fields(line);
      std::string w;
      while (fields >> w) words.insert(to_lower_ascii(w));
    }
    return WordTable(std::move(words));
  }

  const std::unordered_set<std::string>& words() const { return words_; }

private:
  std::unordered_set<std::string> words_;
};

using FunctionWordTable = WordTable;

inline const FunctionWordTable& builtin_function_words() {
  static const FunctionWordTable table{detail::split_word_list(detail::kFunctionWords)};
  return table;
}

inline const WordTable& builtin_event_verbs() {
  static const WordTable table{detail::split_word_list(detail::kEventVerbs)};
  return table;
}

inline std::vector<std::string> content_words(std::string_view text,
                                              const FunctionWordTable& table) {
  std::vector<std::string> out;
  for (std::string& tok : tokenize(text))
    if (!table.contains(tok)) out.push_back(std::move(tok));
  return out;
}

// --- sentence segmentation ---------------------------------------------

namespace detail {

inline const std::unordered_set<std::string>& abbreviation_guards() {
  static const std::unordered_set<std::string> guards = {
      "mr", "mrs", "ms", "dr", "prof", "st", "vs", "etc", "e.g", "i.e",
      "no", "a.m", "p.m", "u.s", "jr", "sr", "approx", "dept", "fig",
  };
  return guards;
}

inline bool terminal_guarded(std::string_view text, size_t dot) {
  // Word immediately before the period, lowered, dots kept for "e.g".
  size_t begin = dot;
  while (begin > 0) {
    unsigned char c = static_cast<unsigned char>(text[begin - 1]);
    if (std::isalnum(c) || c == '.') {
      --begin;
    } else {
      break;
    }
  }
  if (begin == dot) return false;
  std::string word = to_lower_ascii(text.substr(begin, dot - begin));
  if (word.size() == 1 && std::isalpha(static_cast<unsigned char>(word[0])))
    return true; // single initials: "J. Doe"
  return abbreviation_guards().count(word) > 0;
}

} // namespace detail

struct SentenceRange {
  size_t begin = 0; // byte offsets into the input, trimmed of whitespace
  size_t end = 0;
};

// Rule-based splitter: terminal `.?!` followed by whitespace or end of
// input ends a sentence, newlines always end one, and a guard list keeps
// common abbreviations from splitting. Together the returned ranges
// cover every non-whitespace byte of the input.
inline std::vector<SentenceRange> split_sentences(std::string_view text) {
  std::vector<SentenceRange> out;
  size_t cursor = 0;
  auto emit = [&](size_t begin, size_t end) {
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    if (begin < end) out.push_back(SentenceRange{begin, end});
  };
  for (size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '\n') {
      emit(cursor, i);
      cursor = i + 1;
      continue;
    }
    if (c == '.' || c == '?' || c == '!') {
      if (c == '.' && detail::terminal_guarded(text, i)) continue;
      // Swallow runs of terminal punctuation and closing quotes.
      size_t end = i + 1;
      while (end < text.size() &&
             (text[end] == '.' || text[end] == '?' || text[end] == '!' ||
              text[end] == '"' || text[end] == '\''))
        ++end;
      if (end >= text.size() || std::isspace(static_cast<unsigned char>(text[end]))) {
        emit(cursor, end);
        cursor = end;
        i = end - 1;
      }
    }
  }
  emit(cursor, text.size());
  return out;
}

// --- casing helpers -----------------------------------------------------

inline bool is_capitalized_word(std::string_view token) {
  if (token.size() < 2) return false;
  if (!std::isupper(static_cast<unsigned char>(token[0]))) return false;
  for (size_t i = 1; i < token.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(token[i]);
    if (!std::isalnum(c) && c != '\'' && c != '-' && c != '.') return false;
  }
  return true;
}

inline bool contains_substring(std::string_view haystack, std::string_view needle) {
  return haystack.find(needle) != std::string_view::npos;
}

} // namespace memir
