#pragma once
// Deterministic synthetic store generator for property tests and
// fuzzing. Everything is driven by the caller's RNG; equal seeds give
// equal stores.

#include <random>
#include <string>
#include <vector>

#include "memir/store.hpp"

namespace memir::testing {

struct RandomStoreOptions {
  int pages = 3;
  int max_spans_per_page = 5;   // at least 1
  int handles = 3;
  int times = 2;
  int pivots = 2;
  int claims = 6;
};

namespace detail {

inline const std::vector<std::string>& word_pool() {
  static const std::vector<std::string> pool = {
      "harbor", "lantern", "orchard", "violin", "glacier", "compass",
      "meadow", "copper", "saffron", "quartz", "willow", "ember",
      "drift", "marble", "falcon", "cedar", "prism", "anchor",
      "summit", "velvet", "juniper", "basalt", "heron", "tundra",
  };
  return pool;
}

inline std::string random_sentence(std::mt19937& rng, int words) {
  const auto& pool = word_pool();
  std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
  std::string out;
  for (int i = 0; i < words; ++i) {
    if (i) out += ' ';
    out += pool[pick(rng)];
  }
  out += '.';
  out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

template <class T>
inline const T& choose(std::mt19937& rng, const std::vector<T>& items) {
  std::uniform_int_distribution<size_t> pick(0, items.size() - 1);
  return items[pick(rng)];
}

// A word of the span, guaranteed substring.
inline std::string word_of(std::mt19937& rng, const std::string& sentence) {
  std::vector<std::string> words;
  std::string current;
  for (char c : sentence) {
    if (c == ' ' || c == '.') {
      if (!current.empty()) words.push_back(current);
      current.clear();
    } else {
      current += c;
    }
  }
  if (!current.empty()) words.push_back(current);
  return choose(rng, words);
}

} // namespace detail

// Builds a valid store with the requested atom mix. Spans are one
// sentence each; cue and claim support cites stored spans only, so the
// result always passes the admission gate.
inline MemoryStore random_store(std::mt19937& rng, const RandomStoreOptions& opt = {}) {
  using namespace detail;
  MemoryStore store{ConversationMeta{"synthetic", "generator"}};
  std::uniform_int_distribution<int> span_count(1, opt.max_spans_per_page);
  std::uniform_int_distribution<int> words(3, 7);
  std::uniform_int_distribution<int> coin(0, 1);

  uint32_t next_turn = 0;
  std::vector<AtomId> all_spans;
  std::vector<std::vector<AtomId>> spans_by_page;
  for (int p = 0; p < opt.pages; ++p) {
    int n = span_count(rng);
    std::string raw;
    std::vector<CharRange> ranges;
    std::vector<std::string> sentences;
    for (int s = 0; s < n; ++s) {
      std::string speaker = coin(rng) ? "Ana" : "Rui";
      std::string sentence = random_sentence(rng, words(rng));
      uint32_t begin = static_cast<uint32_t>(raw.size() + speaker.size() + 2);
      raw += speaker + ": " + sentence + "\n";
      ranges.push_back(CharRange{begin, begin + static_cast<uint32_t>(sentence.size())});
      sentences.push_back(std::move(sentence));
    }
    PageAtom page;
    page.session_key = "session_" + std::to_string(p + 1);
    page.turn_range = TurnRange{next_turn, next_turn + static_cast<uint32_t>(n) - 1};
    next_turn += static_cast<uint32_t>(n);
    page.raw_text = raw;
    AtomId page_id = store.add_atom(page);

    spans_by_page.emplace_back();
    for (int s = 0; s < n; ++s) {
      SpanAtom span;
      span.page_id = page_id;
      span.speaker = s % 2 ? "Rui" : "Ana";
      span.char_range = ranges[s];
      span.verbatim_text = sentences[s];
      AtomId sid = store.add_atom(span);
      all_spans.push_back(sid);
      spans_by_page.back().push_back(sid);
    }
  }

  std::vector<AtomId> cues;
  for (int i = 0; i < opt.handles; ++i) {
    AtomId sid = choose(rng, all_spans);
    HandleAtom handle;
    handle.surface_text = word_of(rng, store.get<SpanAtom>(sid).verbatim_text);
    handle.support_span_ids = {sid};
    cues.push_back(store.add_atom(handle));
  }
  for (int i = 0; i < opt.times; ++i) {
    AtomId sid = choose(rng, all_spans);
    TimeAtom time;
    time.surface_text = coin(rng) ? "last week" : "May 2024";
    if (coin(rng)) {
      time.normalized = DateInterval::single(*CivilDate::make(2024, 5, 1 + (i % 28)));
    } else {
      time.relative_expression = time.surface_text;
    }
    time.support_span_ids = {sid};
    cues.push_back(store.add_atom(time));
  }
  for (int i = 0; i < opt.pivots; ++i) {
    AtomId sid = choose(rng, all_spans);
    PivotAtom pivot;
    pivot.support_text = word_of(rng, store.get<SpanAtom>(sid).verbatim_text);
    pivot.referent_label = pivot.support_text;
    pivot.support_span_ids = {sid};
    cues.push_back(store.add_atom(pivot));
  }

  std::uniform_int_distribution<int> extra_spans(0, 2);
  std::uniform_int_distribution<int> cue_links(0, cues.empty() ? 0 : 2);
  std::uniform_int_distribution<size_t> page_pick(0, spans_by_page.size() - 1);
  for (int i = 0; i < opt.claims; ++i) {
    size_t p = page_pick(rng);
    if (spans_by_page[p].empty()) continue;
    ClaimAtom claim;
    claim.claim_text = random_sentence(rng, words(rng));
    claim.support_span_ids = {choose(rng, spans_by_page[p])};
    for (int e = extra_spans(rng); e > 0; --e) {
      AtomId extra = choose(rng, all_spans);
      bool seen = false;
      for (AtomId sid : claim.support_span_ids) seen = seen || sid == extra;
      if (!seen && claim.support_span_ids.size() < 3)
        claim.support_span_ids.push_back(extra);
    }
    for (int e = cues.empty() ? 0 : cue_links(rng); e > 0; --e) {
      AtomId cue = choose(rng, cues);
      bool seen = false;
      for (AtomId cid : claim.linked_cue_ids) seen = seen || cid == cue;
      if (!seen) claim.linked_cue_ids.push_back(cue);
    }
    store.add_atom(claim);
  }
  return store;
}

} // namespace memir::testing
