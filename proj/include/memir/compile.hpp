#pragma once
// Compilation: dialogue history in, validated memory store out. Pages
// group turns, spans segment sentences, providers propose cues and
// claims, and every proposal passes the store's admission gate.
// Provider output is untrusted input: invalid proposals become report
// entries, never stored atoms.

#include <algorithm>
#include <cstdio>
#include <future>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "memir/providers.hpp"
#include "memir/store.hpp"
#include "memir/temporal.hpp"
#include "memir/text.hpp"

namespace memir {

struct Turn {
  std::string session_key;
  std::string speaker;
  std::string text;
  std::optional<CivilDateTime> timestamp;
  std::optional<std::string> image_caption;
};

struct InteractionHistory {
  std::vector<Turn> turns;
  std::string conversation_id;
};

enum class PagePolicy { BySession, FixedWindow };

struct CompileConfig {
  size_t max_claims_per_page = 12;
  PagePolicy page_policy = PagePolicy::BySession;
  size_t window_size = 10; // for FixedWindow
  std::string sentence_splitter = "rule_v1";
};

// Line-delimited record shape shared by rejections, truncation notes,
// and provider failures.
struct ReportEntry {
  AtomId page_id;
  std::string provider;
  std::string reason;
  std::string payload_excerpt;
};

struct CompilationReport {
  std::vector<ReportEntry> rejections;
  std::vector<ReportEntry> truncations;
  std::vector<ReportEntry> provider_failures;

  bool partial() const { return !provider_failures.empty(); }

  std::string to_jsonl() const {
    std::string out;
    auto emit = [&out](const ReportEntry& e) {
      OrderedJsonLine(out, e);
    };
    for (const ReportEntry& e : provider_failures) emit(e);
    for (const ReportEntry& e : rejections) emit(e);
    for (const ReportEntry& e : truncations) emit(e);
    return out;
  }

private:
  static void OrderedJsonLine(std::string& out, const ReportEntry& e);
};

namespace detail {

inline std::string excerpt(std::string_view text, size_t cap = 80) {
  if (text.size() <= cap) return std::string(text);
  return std::string(text.substr(0, cap)) + "...";
}

inline std::string json_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

} // namespace detail

inline void CompilationReport::OrderedJsonLine(std::string& out, const ReportEntry& e) {
  out += "{\"page_id\":\"" + e.page_id.render() + "\",\"provider\":\"" +
         detail::json_escape(e.provider) + "\",\"reason\":\"" + detail::json_escape(e.reason) +
         "\",\"payload_excerpt\":\"" + detail::json_escape(e.payload_excerpt) + "\"}\n";
}

// Groups turns into unstored page atoms (ids unset). Page raw_text is
// one "{speaker}: {text}" line per turn; the timestamp hint is the
// first timestamp seen on the page.
inline std::vector<PageAtom> paginate(const InteractionHistory& history,
                                      const CompileConfig& config) {
  if (history.turns.empty()) throw Error(ErrorCode::EmptyHistory, history.conversation_id);

  std::vector<std::pair<size_t, size_t>> groups; // [first, last] turn indices
  if (config.page_policy == PagePolicy::BySession) {
    size_t begin = 0;
    for (size_t i = 1; i <= history.turns.size(); ++i) {
      if (i == history.turns.size() ||
          history.turns[i].session_key != history.turns[begin].session_key) {
        groups.emplace_back(begin, i - 1);
        begin = i;
      }
    }
  } else {
    for (size_t begin = 0; begin < history.turns.size(); begin += config.window_size)
      groups.emplace_back(begin,
                          std::min(begin + config.window_size, history.turns.size()) - 1);
  }

  std::vector<PageAtom> pages;
  for (auto [first, last] : groups) {
    PageAtom page;
    page.session_key = history.turns[first].session_key;
    page.turn_range = {static_cast<uint32_t>(first), static_cast<uint32_t>(last)};
    for (size_t i = first; i <= last; ++i) {
      const Turn& turn = history.turns[i];
      page.raw_text += turn.speaker + ": " + turn.text + "\n";
      if (!page.timestamp_hint && turn.timestamp) page.timestamp_hint = turn.timestamp;
    }
    pages.push_back(std::move(page));
  }
  return pages;
}

// Sentence-level spans (unstored, ids unset) for one stored page. Each
// raw_text line is "{speaker}: {text}"; the speaker label is carried
// on the span, not covered by it.
inline std::vector<SpanAtom> segment_spans(const PageAtom& page) {
  std::vector<SpanAtom> spans;
  size_t line_start = 0;
  const std::string& raw = page.raw_text;
  while (line_start < raw.size()) {
    size_t line_end = raw.find('\n', line_start);
    if (line_end == std::string::npos) line_end = raw.size();
    std::string_view line{raw.data() + line_start, line_end - line_start};
    size_t sep = line.find(": ");
    std::string speaker;
    size_t text_offset = 0;
    if (sep != std::string_view::npos) {
      speaker = std::string(line.substr(0, sep));
      text_offset = sep + 2;
    }
    std::string_view text = line.substr(text_offset);
    for (const SentenceRange& sentence : split_sentences(text)) {
      SpanAtom span;
      span.page_id = page.id;
      span.speaker = speaker;
      uint32_t begin = static_cast<uint32_t>(line_start + text_offset + sentence.begin);
      uint32_t end = static_cast<uint32_t>(line_start + text_offset + sentence.end);
      span.char_range = {begin, end};
      span.verbatim_text = raw.substr(begin, end - begin);
      spans.push_back(std::move(span));
    }
    line_start = line_end + 1;
  }
  return spans;
}

namespace detail {

// Validates and admits one page's cue proposals. Returns the stored
// cues (now carrying ids) for the claim writer.
inline PageCues admit_cues(MemoryStore& store, AtomId page_id, PageCues proposals,
                           CompilationReport& report) {
  const std::vector<AtomId>& page_spans = store.spans_of_page(page_id);
  auto on_page = [&](const std::vector<AtomId>& ids) {
    for (AtomId id : ids) {
      bool found = false;
      for (AtomId sid : page_spans) found = found || sid == id;
      if (!found) return false;
    }
    return true;
  };
  PageCues stored;
  auto admit = [&](auto atom, std::string surface, auto& sink) {
    if (atom.id.valid()) {
      report.rejections.push_back(ReportEntry{page_id, "cue_extractor",
                                              "proposal carries an explicit id",
                                              excerpt(surface)});
      return;
    }
    if (!on_page(atom.support_span_ids)) {
      report.rejections.push_back(ReportEntry{page_id, "cue_extractor",
                                              "cites a span of another page (DanglingReference)",
                                              excerpt(surface)});
      return;
    }
    try {
      AtomId id = store.add_atom(atom);
      atom.id = id;
      sink.push_back(std::move(atom));
    } catch (const Error& e) {
      report.rejections.push_back(
          ReportEntry{page_id, "cue_extractor", e.what(), excerpt(surface)});
    }
  };
  for (HandleAtom& handle : proposals.handles) {
    std::string surface = handle.surface_text;
    admit(std::move(handle), std::move(surface), stored.handles);
  }
  for (TimeAtom& time : proposals.times) {
    std::string surface = time.surface_text;
    admit(std::move(time), std::move(surface), stored.times);
  }
  for (PivotAtom& pivot : proposals.pivots) {
    std::string label = pivot.referent_label;
    admit(std::move(pivot), std::move(label), stored.pivots);
  }
  return stored;
}

inline std::vector<AtomId> admit_claims(MemoryStore& store, AtomId page_id,
                                        std::vector<ClaimAtom> proposals, size_t budget,
                                        CompilationReport& report) {
  if (proposals.size() > budget) {
    report.truncations.push_back(
        ReportEntry{page_id, "claim_writer", "claim budget truncation",
                    "kept " + std::to_string(budget) + " dropped " +
                        std::to_string(proposals.size() - budget)});
    proposals.resize(budget);
  }
  const std::vector<AtomId>& page_spans = store.spans_of_page(page_id);
  auto on_this_page = [&](AtomId id) {
    for (AtomId sid : page_spans)
      if (sid == id) return true;
    return false;
  };

  std::vector<AtomId> admitted;
  for (ClaimAtom& claim : proposals) {
    std::string what = excerpt(claim.claim_text);
    if (claim.id.valid()) {
      report.rejections.push_back(ReportEntry{page_id, "claim_writer",
                                              "proposal carries an explicit id", what});
      continue;
    }
    if (claim.support_span_ids.empty() || !on_this_page(claim.support_span_ids.front())) {
      report.rejections.push_back(ReportEntry{
          page_id, "claim_writer", "first support span is not on this page", what});
      continue;
    }
    // A linked cue must touch the claim's support spans or this page.
    bool cues_ok = true;
    for (AtomId cue_id : claim.linked_cue_ids) {
      bool touches = false;
      if (store.contains(cue_id)) {
        for (AtomId sid : support_of(store.atom(cue_id)))
          touches = touches || on_this_page(sid) ||
                    std::find(claim.support_span_ids.begin(), claim.support_span_ids.end(),
                              sid) != claim.support_span_ids.end();
      }
      if (!touches) {
        report.rejections.push_back(ReportEntry{
            page_id, "claim_writer",
            "linked cue " + cue_id.render() + " does not touch the claim's evidence", what});
        cues_ok = false;
        break;
      }
    }
    if (!cues_ok) continue;
    try {
      admitted.push_back(store.add_atom(std::move(claim)));
    } catch (const Error& e) {
      report.rejections.push_back(ReportEntry{page_id, "claim_writer", e.what(), what});
    }
  }
  return admitted;
}

} // namespace detail

// Runs the extractor for one stored page and admits what survives
// validation.
inline PageCues extract_cues(MemoryStore& store, AtomId page_id, CueExtractor& extractor,
                             CompilationReport& report) {
  const PageAtom& page = store.get<PageAtom>(page_id);
  std::vector<SpanAtom> spans;
  for (AtomId sid : store.spans_of_page(page_id))
    spans.push_back(store.get<SpanAtom>(sid));
  PageCues proposals;
  try {
    proposals = extractor.extract(page, spans);
  } catch (const std::exception& e) {
    report.provider_failures.push_back(
        ReportEntry{page_id, "cue_extractor", e.what(), ""});
    return {};
  }
  return detail::admit_cues(store, page_id, std::move(proposals), report);
}

// Runs the writer for one stored page against its admitted cues.
inline std::vector<AtomId> write_claims(MemoryStore& store, AtomId page_id,
                                        const PageCues& cues, ClaimWriter& writer,
                                        size_t budget, CompilationReport& report) {
  const PageAtom& page = store.get<PageAtom>(page_id);
  std::vector<SpanAtom> spans;
  for (AtomId sid : store.spans_of_page(page_id))
    spans.push_back(store.get<SpanAtom>(sid));
  std::vector<ClaimAtom> proposals;
  try {
    proposals = writer.write(page, spans, cues, budget);
  } catch (const std::exception& e) {
    report.provider_failures.push_back(ReportEntry{page_id, "claim_writer", e.what(), ""});
    return {};
  }
  return detail::admit_claims(store, page_id, std::move(proposals), budget, report);
}

// Deterministic view construction over a compiled store. Views are
// derived content only: every key is read off the owner atom (plus
// page-local neighbor text for span_context).
inline std::vector<RetrievalView> build_views(const MemoryStore& store) {
  std::unordered_map<AtomId, std::vector<AtomId>, AtomIdHash> claims_of;
  for (AtomId claim_id : store.kind_ids(AtomKind::Claim))
    for (AtomId member : store.association_set(claim_id))
      claims_of[member].push_back(claim_id);
  auto targets_of = [&](AtomId member) -> std::vector<AtomId> {
    auto it = claims_of.find(member);
    return it == claims_of.end() ? std::vector<AtomId>{} : it->second;
  };

  // Page-local span positions for neighbor context.
  std::unordered_map<AtomId, size_t, AtomIdHash> span_pos;
  for (AtomId page_id : store.pages()) {
    const auto& spans = store.spans_of_page(page_id);
    for (size_t i = 0; i < spans.size(); ++i) span_pos[spans[i]] = i;
  }

  std::vector<RetrievalView> views;
  size_t serial = 0;
  auto next_id = [&serial] { return "r" + std::to_string(serial++); };

  for (const MemoryAtom& atom : store.atoms()) {
    switch (kind_of(atom)) {
      case AtomKind::Page:
        break;
      case AtomKind::Claim: {
        const auto& claim = std::get<ClaimAtom>(atom);
        views.push_back(RetrievalView{next_id(), claim.id, ViewKind::ClaimText,
                                      claim.claim_text, {claim.id}});
        break;
      }
      case AtomKind::Span: {
        const auto& span = std::get<SpanAtom>(atom);
        std::vector<AtomId> targets = targets_of(span.id);
        views.push_back(RetrievalView{next_id(), span.id, ViewKind::SpanText,
                                      span.verbatim_text, targets});
        const auto& siblings = store.spans_of_page(span.page_id);
        size_t pos = span_pos.at(span.id);
        std::string context;
        if (pos > 0) context += store.get<SpanAtom>(siblings[pos - 1]).verbatim_text + " ";
        context += span.verbatim_text;
        if (pos + 1 < siblings.size())
          context += " " + store.get<SpanAtom>(siblings[pos + 1]).verbatim_text;
        views.push_back(RetrievalView{next_id(), span.id, ViewKind::SpanContext,
                                      std::move(context), std::move(targets)});
        break;
      }
      case AtomKind::Handle: {
        const auto& handle = std::get<HandleAtom>(atom);
        views.push_back(RetrievalView{next_id(), handle.id, ViewKind::HandleAlias,
                                      handle.surface_text, targets_of(handle.id)});
        break;
      }
      case AtomKind::Time: {
        const auto& time = std::get<TimeAtom>(atom);
        views.push_back(RetrievalView{next_id(), time.id, ViewKind::TimeKey,
                                      render_time(time.surface_text, time.normalized),
                                      targets_of(time.id)});
        break;
      }
      case AtomKind::Pivot: {
        const auto& pivot = std::get<PivotAtom>(atom);
        views.push_back(RetrievalView{next_id(), pivot.id, ViewKind::PivotKey,
                                      pivot.referent_label, targets_of(pivot.id)});
        break;
      }
    }
  }
  return views;
}

struct CompileResult {
  MemoryStore store;
  CompilationReport report;
};

// Full compilation. Cue extraction fans out across pages (providers
// are required to be thread-safe); admission stays single-writer in
// page order, so the result is independent of worker timing.
inline CompileResult compile(const InteractionHistory& history, const ProviderSet& providers,
                             const CompileConfig& config) {
  CompileResult result;
  result.store.set_meta(ConversationMeta{history.conversation_id, "dialogue"});
  MemoryStore& store = result.store;
  CompilationReport& report = result.report;

  std::vector<PageAtom> pages = paginate(history, config);
  std::vector<AtomId> page_ids;
  for (PageAtom& page : pages) {
    AtomId page_id = store.add_atom(std::move(page));
    page_ids.push_back(page_id);
    for (SpanAtom& span : segment_spans(store.get<PageAtom>(page_id)))
      store.add_atom(std::move(span));
  }

  // Phase 1: pure provider calls, one task per page. Tasks read only
  // their own snapshot; the store is not touched off-thread.
  struct PageInput {
    PageAtom page;
    std::vector<SpanAtom> spans;
  };
  std::vector<PageInput> inputs;
  for (AtomId page_id : page_ids) {
    PageInput input{store.get<PageAtom>(page_id), {}};
    for (AtomId sid : store.spans_of_page(page_id))
      input.spans.push_back(store.get<SpanAtom>(sid));
    inputs.push_back(std::move(input));
  }
  struct Extraction {
    PageCues proposals;
    std::optional<std::string> error;
  };
  std::vector<std::future<Extraction>> extractions;
  for (const PageInput& input : inputs) {
    extractions.push_back(std::async(std::launch::async, [&input, &providers] {
      Extraction out;
      try {
        out.proposals = providers.cue_extractor->extract(input.page, input.spans);
      } catch (const std::exception& e) {
        out.error = e.what();
      }
      return out;
    }));
  }

  // Phase 2: admission and claim writing, page order.
  for (size_t i = 0; i < page_ids.size(); ++i) {
    AtomId page_id = page_ids[i];
    Extraction extraction = extractions[i].get();
    PageCues cues;
    if (extraction.error) {
      report.provider_failures.push_back(
          ReportEntry{page_id, "cue_extractor", *extraction.error, ""});
    } else {
      cues = detail::admit_cues(store, page_id, std::move(extraction.proposals), report);
    }
    write_claims(store, page_id, cues, *providers.claim_writer, config.max_claims_per_page,
                 report);
  }

  for (RetrievalView& view : build_views(store)) store.add_view(std::move(view));
  return result;
}

} // namespace memir
