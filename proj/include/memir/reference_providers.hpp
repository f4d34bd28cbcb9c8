#pragma once
// Deterministic reference providers. They stand in for model-backed
// implementations so the whole pipeline runs hermetically: rule-based
// cue extraction, template claim writing, feature-hashing embeddings,
// lexical-overlap scoring and selection, and an extractive composer.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "memir/providers.hpp"
#include "memir/temporal.hpp"
#include "memir/text.hpp"

namespace memir {

namespace detail {

// Maximal runs of capitalized words joined by single spaces. Single
// words carry weaker evidence of namehood than multi-word runs, so the
// caller applies stricter rules to them.
struct CapitalizedRun {
  size_t begin = 0;
  size_t end = 0;
  bool sentence_initial = false;
  bool single = false;
};

inline std::vector<CapitalizedRun> capitalized_runs(std::string_view sentence) {
  std::vector<Token> toks = tokenize_with_offsets(sentence);
  std::vector<CapitalizedRun> runs;
  size_t i = 0;
  while (i < toks.size()) {
    if (!is_capitalized_word(toks[i].text)) {
      ++i;
      continue;
    }
    size_t j = i;
    while (j + 1 < toks.size() && is_capitalized_word(toks[j + 1].text) &&
           toks[j + 1].begin == toks[j].end + 1 && sentence[toks[j].end] == ' ')
      ++j;
    runs.push_back(CapitalizedRun{toks[i].begin, toks[j].end, i == 0, j == i});
    i = j + 1;
  }
  return runs;
}

// Capitalized single words that are pronouns or calendar vocabulary
// are never handles.
inline bool handle_stopword(std::string_view word) {
  std::string w = to_lower_ascii(word);
  if (w == "i" || w.rfind("i'", 0) == 0) return true;
  return month_from_name(w).has_value() || weekday_from_name(w).has_value();
}

// Fraction of the query's distinct content words that appear in the
// candidate text. The shared rule behind the reference scorer and
// selector.
inline double overlap_score(std::string_view query, std::string_view text,
                            const FunctionWordTable& table) {
  std::set<std::string> wanted;
  for (std::string& w : content_words(query, table)) wanted.insert(std::move(w));
  if (wanted.empty()) return 0.0;
  std::set<std::string> present;
  for (std::string& w : tokenize(text)) present.insert(std::move(w));
  size_t hits = 0;
  for (const std::string& w : wanted) hits += present.count(w);
  return static_cast<double>(hits) / static_cast<double>(wanted.size());
}

inline uint64_t fnv1a64(std::string_view text) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

} // namespace detail

// Rule-based cue extraction. Handles are capitalized runs: multi-word
// runs qualify outright, single words only when the page uses them at
// a non-sentence-initial position; times come from the temporal
// matcher; a sentence yields a pivot when it contains an event verb
// followed by a noun-ish label.
class ReferenceCueExtractor : public CueExtractor {
public:
  ReferenceCueExtractor()
      : function_words_(&builtin_function_words()), event_verbs_(&builtin_event_verbs()) {}
  ReferenceCueExtractor(const FunctionWordTable* function_words, const WordTable* event_verbs)
      : function_words_(function_words), event_verbs_(event_verbs) {}

  PageCues extract(const PageAtom& page, const std::vector<SpanAtom>& spans) override {
    PageCues cues;
    std::optional<CivilDate> reference;
    if (page.timestamp_hint) reference = page.timestamp_hint->date;

    // Handle candidates are gathered page-wide before emission so the
    // sentence-initial-only exclusion can see every occurrence.
    struct HandleSeen {
      std::vector<AtomId> spans;
      bool non_initial = false;
      bool multi = false;
    };
    std::vector<std::string> handle_order;
    std::map<std::string, HandleSeen> handle_seen;

    for (const SpanAtom& span : spans) {
      const std::string& text = span.verbatim_text;

      std::vector<TimeMatch> matches = match_time_expressions(text, reference);
      auto inside_time = [&matches](size_t begin, size_t end) {
        for (const TimeMatch& m : matches)
          if (begin >= m.begin && end <= m.end) return true;
        return false;
      };

      for (const detail::CapitalizedRun& run : detail::capitalized_runs(text)) {
        std::string surface = text.substr(run.begin, run.end - run.begin);
        if (inside_time(run.begin, run.end)) continue;
        if (run.single && detail::handle_stopword(surface)) continue;
        auto [it, fresh] = handle_seen.try_emplace(surface);
        if (fresh) handle_order.push_back(surface);
        if (it->second.spans.empty() || it->second.spans.back() != span.id)
          it->second.spans.push_back(span.id);
        it->second.non_initial = it->second.non_initial || !run.sentence_initial;
        it->second.multi = it->second.multi || !run.single;
      }

      for (const TimeMatch& m : matches) {
        TimeAtom time;
        time.surface_text = m.surface;
        time.normalized = m.interval;
        if (!m.interval || m.relative) time.relative_expression = m.surface;
        time.support_span_ids = {span.id};
        cues.times.push_back(std::move(time));
      }

      if (auto pivot = pivot_of(span, matches)) cues.pivots.push_back(std::move(*pivot));
    }

    for (const std::string& surface : handle_order) {
      const auto& seen = handle_seen.at(surface);
      if (!seen.non_initial && !seen.multi) continue;
      HandleAtom handle;
      handle.surface_text = surface;
      handle.support_span_ids = seen.spans;
      cues.handles.push_back(std::move(handle));
    }
    return cues;
  }

private:
  std::optional<PivotAtom> pivot_of(const SpanAtom& span,
                                    const std::vector<TimeMatch>& times) const {
    static const std::set<std::string> determiners = {
        "the", "a", "an", "my", "her", "his", "their", "our", "your", "its",
        "this", "that", "these", "those",
    };
    const std::string& text = span.verbatim_text;
    std::vector<Token> toks = tokenize_with_offsets(text);
    auto inside_time = [&](const Token& t) {
      for (const TimeMatch& m : times)
        if (t.begin >= m.begin && t.begin < m.end) return true;
      return false;
    };

    for (size_t v = 0; v < toks.size(); ++v) {
      if (!event_verbs_->contains(toks[v].text)) continue;
      size_t i = v + 1;
      while (i < toks.size() && determiners.count(to_lower_ascii(toks[i].text))) ++i;
      std::vector<size_t> label;
      while (i < toks.size() && label.size() < 4) {
        if (function_words_->contains(toks[i].text)) break;
        if (inside_time(toks[i])) break;
        label.push_back(i);
        ++i;
      }
      if (label.empty()) return std::nullopt; // first event verb decides
      PivotAtom pivot;
      std::string label_text;
      for (size_t k : label) {
        if (!label_text.empty()) label_text += ' ';
        label_text += toks[k].text;
      }
      pivot.referent_label = std::move(label_text);
      pivot.support_text = text.substr(toks[v].begin, toks[label.back()].end - toks[v].begin);
      pivot.support_span_ids = {span.id};
      return pivot;
    }
    return std::nullopt;
  }

  const FunctionWordTable* function_words_;
  const WordTable* event_verbs_;
};

// Template claim writer: pivot-bearing sentences first, then the other
// content sentences, one claim per sentence in page order, capped by
// the budget. Sentence-initial first-person pronouns are resolved to
// the speaker; other sentences are wrapped as reported speech.
class ReferenceClaimWriter : public ClaimWriter {
public:
  ReferenceClaimWriter() : function_words_(&builtin_function_words()) {}
  explicit ReferenceClaimWriter(const FunctionWordTable* function_words)
      : function_words_(function_words) {}

  std::vector<ClaimAtom> write(const PageAtom&, const std::vector<SpanAtom>& spans,
                               const PageCues& cues, size_t budget) override {
    auto pivot_bearing = [&](AtomId span_id) {
      for (const PivotAtom& pivot : cues.pivots)
        for (AtomId sid : pivot.support_span_ids)
          if (sid == span_id) return true;
      return false;
    };

    std::vector<const SpanAtom*> ordered;
    for (const SpanAtom& span : spans)
      if (pivot_bearing(span.id)) ordered.push_back(&span);
    for (const SpanAtom& span : spans)
      if (!pivot_bearing(span.id) && content_sentence(span.verbatim_text))
        ordered.push_back(&span);

    std::vector<ClaimAtom> claims;
    for (const SpanAtom* span : ordered) {
      if (claims.size() >= budget) break;
      ClaimAtom claim;
      claim.claim_text = claim_text(span->speaker, span->verbatim_text);
      claim.support_span_ids = {span->id};
      for (const HandleAtom& cue : cues.handles) link_if_supported(claim, cue.id, cue.support_span_ids, span->id);
      for (const TimeAtom& cue : cues.times) link_if_supported(claim, cue.id, cue.support_span_ids, span->id);
      for (const PivotAtom& cue : cues.pivots) link_if_supported(claim, cue.id, cue.support_span_ids, span->id);
      claims.push_back(std::move(claim));
    }
    return claims;
  }

private:
  static void link_if_supported(ClaimAtom& claim, AtomId cue_id,
                                const std::vector<AtomId>& cue_spans, AtomId span_id) {
    for (AtomId sid : cue_spans)
      if (sid == span_id) {
        claim.linked_cue_ids.push_back(cue_id);
        return;
      }
  }

  // A sentence is content when it has at least 3 tokens, 2 of them
  // content words; chatter like "haha nice" stays out.
  bool content_sentence(std::string_view text) const {
    std::vector<std::string> toks = tokenize(text);
    if (toks.size() < 3) return false;
    size_t content = 0;
    for (const std::string& t : toks)
      if (!function_words_->contains(t)) ++content;
    return content >= 2;
  }

  std::string claim_text(const std::string& speaker, const std::string& sentence) const {
    std::vector<Token> toks = tokenize_with_offsets(sentence);
    if (!toks.empty()) {
      const Token& head = toks.front();
      std::string rest = sentence.substr(head.end);
      if (head.text == "I") return speaker + rest;
      if (head.text == "I'm") return speaker + " is" + rest;
      if (head.text == "I've") return speaker + " has" + rest;
      if (head.text == "We") return speaker + " and others" + rest;
      if (head.text == "We're") return speaker + " and others are" + rest;
      if (head.text == "We've") return speaker + " and others have" + rest;
    }
    return speaker + " stated: " + sentence;
  }

  const FunctionWordTable* function_words_;
};

// Bag-of-words feature hashing with a sign hash, L2-normalized.
class ReferenceEmbedder : public Embedder {
public:
  explicit ReferenceEmbedder(size_t dimension = 1024) : dimension_(dimension) {}

  size_t dimension() const override { return dimension_; }

  std::vector<float> embed(std::string_view text) override {
    std::vector<float> v(dimension_, 0.0f);
    for (const std::string& token : tokenize(text)) {
      uint64_t h = detail::fnv1a64(token);
      size_t bucket = static_cast<size_t>(h % dimension_);
      v[bucket] += (h >> 63) ? -1.0f : 1.0f;
    }
    double norm = 0;
    for (float x : v) norm += static_cast<double>(x) * x;
    if (norm > 0) {
      float inv = static_cast<float>(1.0 / std::sqrt(norm));
      for (float& x : v) x *= inv;
    }
    return v;
  }

private:
  size_t dimension_;
};

class ReferenceBundleScorer : public BundleScorer {
public:
  double score(std::string_view query, std::string_view serialized_bundle) override {
    return detail::overlap_score(query, serialized_bundle, builtin_function_words());
  }
};

// Greedy top-X by overlap score; direct at or above 0.5, support
// below. The threshold is a reference-implementation convention, not a
// tuned value.
class ReferenceBundleSelector : public BundleSelector {
public:
  std::vector<Selection> select(
      std::string_view query,
      const std::vector<std::pair<AtomId, std::string>>& serialized_bundles,
      size_t max_selected) override {
    std::vector<std::pair<double, size_t>> scored;
    scored.reserve(serialized_bundles.size());
    for (size_t i = 0; i < serialized_bundles.size(); ++i)
      scored.emplace_back(
          detail::overlap_score(query, serialized_bundles[i].second, builtin_function_words()), i);
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });

    std::vector<Selection> out;
    for (size_t k = 0; k < scored.size() && out.size() < max_selected; ++k) {
      auto [score, index] = scored[k];
      out.push_back(Selection{serialized_bundles[index].first,
                              score >= 0.5 ? FactRole::Direct : FactRole::Support});
    }
    return out;
  }
};

// Extractive composer over the rendered fact interface: answer with
// the highest-ranked direct record's claim text, adding its first
// temporal cue for when-questions. No direct record means no answer.
class ReferenceAnswerComposer : public AnswerComposer {
public:
  AnswerOutcome compose(std::string_view query, std::string_view rendered_interface) override {
    struct Record {
      bool direct = false;
      std::string text;
      std::string first_time;
    };
    std::vector<Record> records;
    size_t pos = 0;
    while (pos < rendered_interface.size()) {
      size_t eol = rendered_interface.find('\n', pos);
      if (eol == std::string_view::npos) eol = rendered_interface.size();
      std::string_view line = rendered_interface.substr(pos, eol - pos);
      pos = eol + 1;

      if (line.rfind("FACT[", 0) == 0) {
        size_t close = line.find("] (");
        size_t after_role = line.find(") ", close);
        if (close == std::string_view::npos || after_role == std::string_view::npos) continue;
        Record rec;
        rec.direct = line.substr(close + 3, after_role - close - 3) == "direct";
        rec.text = std::string(line.substr(after_role + 2));
        records.push_back(std::move(rec));
      } else if (line.rfind("TIME: ", 0) == 0 && !records.empty() &&
                 records.back().first_time.empty()) {
        std::string_view cues = line.substr(6);
        size_t sep = cues.find("; ");
        records.back().first_time =
            std::string(sep == std::string_view::npos ? cues : cues.substr(0, sep));
      }
    }

    for (const Record& rec : records) {
      if (!rec.direct) continue;
      std::string lowered = to_lower_ascii(query);
      bool when_question =
          lowered.rfind("when ", 0) == 0 || lowered.find(" when ") != std::string::npos;
      if (when_question && !rec.first_time.empty())
        return AnswerOutcome{false, rec.text + " (" + rec.first_time + ")"};
      return AnswerOutcome{false, rec.text};
    }
    return AnswerOutcome{true, ""};
  }
};

inline ProviderSet reference_providers(size_t dense_dimension = 1024) {
  ProviderSet set;
  set.cue_extractor = std::make_shared<ReferenceCueExtractor>();
  set.claim_writer = std::make_shared<ReferenceClaimWriter>();
  set.embedder = std::make_shared<ReferenceEmbedder>(dense_dimension);
  set.scorer = std::make_shared<ReferenceBundleScorer>();
  set.selector = std::make_shared<ReferenceBundleSelector>();
  set.composer = std::make_shared<ReferenceAnswerComposer>();
  return set;
}

} // namespace memir
