#pragma once
// Coarse-to-fine bundle utilization: rho-top-M pool, cross-encoder
// style reranking, role-tagged selection, and the normalized fact
// interface handed to answer providers. Provider failures never break
// the pipeline: reranking falls back to rho order and selection to
// top-X direct, both flagged; only the final composer surfaces its
// failure, because an ungrounded answer is worse than none.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <future>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <type_traits>
#include <vector>

#include "memir/projection.hpp"
#include "memir/providers.hpp"
#include "memir/temporal.hpp"

namespace memir {

struct SerializationCaps {
  size_t max_span_excerpts = 3;
  size_t max_chars = 1200;
};

struct UtilizationConfig {
  size_t pool_m = 32;          // pre-reranking pool size (M)
  size_t rerank_keep_k = 32;   // kept after reranking (K <= M)
  size_t select_budget_x = 6;  // selection budget (X)
  SerializationCaps serialization_caps;
  uint64_t provider_timeout_ms = 30000; // 0 disables the timeout guard
};

namespace detail {

// Runs a provider call on its own thread so a hung provider cannot
// stall the pipeline past the deadline. The abandoned call keeps its
// detached thread; the pipeline moves on.
template <typename F>
auto call_with_timeout(F&& f, uint64_t timeout_ms) {
  using R = std::invoke_result_t<F>;
  if (timeout_ms == 0) return f();
  std::packaged_task<R()> task(std::forward<F>(f));
  std::future<R> result = task.get_future();
  std::thread(std::move(task)).detach();
  if (result.wait_for(std::chrono::milliseconds(timeout_ms)) != std::future_status::ready)
    throw Error(ErrorCode::ProviderFailure, "provider call exceeded " +
                                                std::to_string(timeout_ms) + "ms");
  return result.get();
}

// Global turn index of a span: the page's first turn plus the span's
// line within the page.
inline uint32_t turn_of_span(const SpanAtom& span, const MemoryStore& store) {
  const PageAtom& page = store.get<PageAtom>(span.page_id);
  uint32_t line = 0;
  for (uint32_t i = 0; i < span.char_range.begin && i < page.raw_text.size(); ++i)
    if (page.raw_text[i] == '\n') ++line;
  return page.turn_range.first + line;
}

inline std::string span_locator(const SpanAtom& span, const MemoryStore& store) {
  return "{P" + std::to_string(span.page_id.page_ordinal) + ":" +
         std::to_string(turn_of_span(span, store)) + "}";
}

// Time cue ordering: normalized start ascending, undated cues last,
// ties by id.
inline std::vector<AtomId> ordered_time_cues(const std::vector<AtomId>& closure,
                                             const MemoryStore& store) {
  std::vector<AtomId> times;
  for (AtomId id : closure)
    if (id.kind == AtomKind::Time) times.push_back(id);
  std::stable_sort(times.begin(), times.end(), [&store](AtomId a, AtomId b) {
    const TimeAtom& ta = store.get<TimeAtom>(a);
    const TimeAtom& tb = store.get<TimeAtom>(b);
    if (ta.normalized && tb.normalized) {
      if (ta.normalized->start != tb.normalized->start)
        return ta.normalized->start < tb.normalized->start;
      return a < b;
    }
    if (ta.normalized != tb.normalized) return ta.normalized.has_value();
    return a < b;
  });
  return times;
}

// Head text for serialization. Bundles are claim-headed in the full
// pipeline; ablated pipelines may head them with spans or cues.
inline std::string head_text(AtomId head, const MemoryStore& store) {
  switch (head.kind) {
    case AtomKind::Claim: return store.get<ClaimAtom>(head).claim_text;
    case AtomKind::Span: return store.get<SpanAtom>(head).verbatim_text;
    case AtomKind::Handle: return store.get<HandleAtom>(head).surface_text;
    case AtomKind::Time: {
      const TimeAtom& t = store.get<TimeAtom>(head);
      return render_time(t.surface_text, t.normalized);
    }
    case AtomKind::Pivot: return store.get<PivotAtom>(head).support_text;
    default:
      throw Error(ErrorCode::InvalidAtom, "bundle headed by " + head.render());
  }
}

inline std::vector<AtomId> head_support(AtomId head, const MemoryStore& store) {
  switch (head.kind) {
    case AtomKind::Claim: return store.get<ClaimAtom>(head).support_span_ids;
    case AtomKind::Span: return {head};
    case AtomKind::Handle: return store.get<HandleAtom>(head).support_span_ids;
    case AtomKind::Time: return store.get<TimeAtom>(head).support_span_ids;
    case AtomKind::Pivot: return store.get<PivotAtom>(head).support_span_ids;
    default:
      throw Error(ErrorCode::InvalidAtom, "bundle headed by " + head.render());
  }
}

// Excerpted spans: the head's own support first, then any other
// closure spans by ascending id, capped.
inline std::vector<AtomId> excerpt_spans(const CandidateBundle& bundle,
                                         const MemoryStore& store, size_t cap) {
  std::vector<AtomId> spans = head_support(bundle.claim_id, store);
  for (AtomId id : bundle.closure) {
    if (id.kind != AtomKind::Span) continue;
    if (std::find(spans.begin(), spans.end(), id) == spans.end()) spans.push_back(id);
  }
  if (spans.size() > cap) spans.resize(cap);
  return spans;
}

} // namespace detail

// The canonical bundle serialization: claim text, rendered time cues,
// then capped span excerpts with page:turn locators. Both the reranker
// and the selector see exactly this text.
inline std::string serialize_bundle(const CandidateBundle& bundle, const MemoryStore& store,
                                    const SerializationCaps& caps) {
  std::string out = detail::head_text(bundle.claim_id, store);
  std::vector<AtomId> times = detail::ordered_time_cues(bundle.closure, store);
  if (!times.empty()) {
    out += "\nTIME: ";
    for (size_t i = 0; i < times.size(); ++i) {
      const TimeAtom& t = store.get<TimeAtom>(times[i]);
      if (i) out += "; ";
      out += render_time(t.surface_text, t.normalized);
    }
  }
  for (AtomId span_id : detail::excerpt_spans(bundle, store, caps.max_span_excerpts)) {
    const SpanAtom& span = store.get<SpanAtom>(span_id);
    out += "\nEVIDENCE: " + detail::span_locator(span, store) + " \"" + span.verbatim_text +
           "\"";
  }
  if (out.size() > caps.max_chars) out.resize(caps.max_chars);
  return out;
}

struct RerankedBundle {
  CandidateBundle bundle;
  double rank_score = 0.0;
};

struct RerankOutcome {
  std::vector<RerankedBundle> kept; // sorted by rank_score desc, ties rho then id
  bool scorer_fallback = false;
};

// Scores the rho-top-M bundles and keeps the s_rank-top-K. Bundles
// outside the pool are never scored. Any scorer failure (throw,
// timeout, non-finite score) falls back to rho order, flagged.
inline RerankOutcome rerank_pool(std::vector<CandidateBundle> bundles, std::string_view query,
                                 BundleScorer& scorer, const MemoryStore& store,
                                 const UtilizationConfig& config) {
  std::sort(bundles.begin(), bundles.end(),
            [](const CandidateBundle& a, const CandidateBundle& b) {
              if (a.rho != b.rho) return a.rho > b.rho;
              return a.claim_id < b.claim_id;
            });
  if (bundles.size() > config.pool_m) bundles.resize(config.pool_m);

  RerankOutcome out;
  try {
    // Score every pooled bundle before any move so the fallback path
    // still sees intact bundles.
    std::vector<double> scores;
    for (const CandidateBundle& bundle : bundles) {
      std::string serialized = serialize_bundle(bundle, store, config.serialization_caps);
      double s = detail::call_with_timeout(
          [&scorer, query, &serialized] { return scorer.score(query, serialized); },
          config.provider_timeout_ms);
      if (!std::isfinite(s))
        throw Error(ErrorCode::ScorerFailure, "scorer returned a non-finite value");
      scores.push_back(s);
    }
    for (size_t i = 0; i < bundles.size(); ++i)
      out.kept.push_back(RerankedBundle{std::move(bundles[i]), scores[i]});
    std::stable_sort(out.kept.begin(), out.kept.end(),
                     [](const RerankedBundle& a, const RerankedBundle& b) {
                       if (a.rank_score != b.rank_score) return a.rank_score > b.rank_score;
                       if (a.bundle.rho != b.bundle.rho) return a.bundle.rho > b.bundle.rho;
                       return a.bundle.claim_id < b.bundle.claim_id;
                     });
  } catch (const std::exception&) {
    out.kept.clear();
    for (CandidateBundle& bundle : bundles)
      out.kept.push_back(RerankedBundle{std::move(bundle), 0.0});
    out.scorer_fallback = true;
  }
  if (out.kept.size() > config.rerank_keep_k) out.kept.resize(config.rerank_keep_k);
  return out;
}

struct SelectedBundle {
  CandidateBundle bundle;
  FactRole role = FactRole::Support;
  double rank_score = 0.0;
};

struct SelectionOutcome {
  std::vector<SelectedBundle> selected;
  bool selector_fallback = false;
};

// Offers the reranked bundles to the selector and validates its
// output: unknown ids dropped, duplicates collapsed, at most X kept.
// Selector failure falls back to the s_rank-top-X, all direct.
inline SelectionOutcome select_bundles(const std::vector<RerankedBundle>& reranked,
                                       std::string_view query, BundleSelector& selector,
                                       const MemoryStore& store,
                                       const UtilizationConfig& config) {
  SelectionOutcome out;
  if (reranked.empty()) return out;

  std::vector<std::pair<AtomId, std::string>> offers;
  for (const RerankedBundle& rb : reranked)
    offers.emplace_back(rb.bundle.claim_id,
                        serialize_bundle(rb.bundle, store, config.serialization_caps));

  auto fallback = [&] {
    out.selected.clear();
    for (size_t i = 0; i < reranked.size() && i < config.select_budget_x; ++i)
      out.selected.push_back(
          SelectedBundle{reranked[i].bundle, FactRole::Direct, reranked[i].rank_score});
    out.selector_fallback = true;
  };

  std::vector<BundleSelector::Selection> picks;
  try {
    picks = detail::call_with_timeout(
        [&selector, query, &offers, &config] {
          return selector.select(query, offers, config.select_budget_x);
        },
        config.provider_timeout_ms);
  } catch (const std::exception&) {
    fallback();
    return out;
  }

  for (const BundleSelector::Selection& pick : picks) {
    if (out.selected.size() >= config.select_budget_x) break;
    bool duplicate = false;
    for (const SelectedBundle& s : out.selected)
      duplicate = duplicate || s.bundle.claim_id == pick.bundle_id;
    if (duplicate) continue;
    for (const RerankedBundle& rb : reranked) {
      if (rb.bundle.claim_id == pick.bundle_id) {
        out.selected.push_back(SelectedBundle{rb.bundle, pick.role, rb.rank_score});
        break;
      }
    }
    // Unknown ids fall through silently: validation gate, not an error.
  }
  return out;
}

struct ProvenanceExcerpt {
  AtomId span_id;
  std::string locator; // {P<page>:<turn>}
  std::string excerpt; // byte-equal to the span's verbatim_text
};

struct FactRecord {
  AtomId claim_id;
  std::string claim_text;
  std::vector<AtomId> provenance;          // E_i, sorted ascending
  std::vector<ProvenanceExcerpt> excerpts; // resolved span excerpts, capped
  std::vector<std::string> temporal_cues;  // rendered, normalized-start order
  FactRole role = FactRole::Support;
  double rank_score = 0.0;
};

struct FactInterface {
  std::string query;
  std::vector<FactRecord> records;
  bool sufficiency_flag = false;
};

inline FactInterface build_fact_interface(const std::vector<SelectedBundle>& selected,
                                          std::string_view query, const MemoryStore& store,
                                          const SerializationCaps& caps) {
  FactInterface out;
  out.query = std::string(query);
  for (const SelectedBundle& sel : selected) {
    FactRecord record;
    record.claim_id = sel.bundle.claim_id;
    record.claim_text = detail::head_text(sel.bundle.claim_id, store);
    record.provenance = sel.bundle.closure;
    for (AtomId span_id : detail::excerpt_spans(sel.bundle, store, caps.max_span_excerpts)) {
      const SpanAtom& span = store.get<SpanAtom>(span_id);
      record.excerpts.push_back(
          ProvenanceExcerpt{span_id, detail::span_locator(span, store), span.verbatim_text});
    }
    for (AtomId time_id : detail::ordered_time_cues(sel.bundle.closure, store)) {
      const TimeAtom& t = store.get<TimeAtom>(time_id);
      record.temporal_cues.push_back(render_time(t.surface_text, t.normalized));
    }
    record.role = sel.role;
    record.rank_score = sel.rank_score;
    out.records.push_back(std::move(record));
  }
  std::stable_sort(out.records.begin(), out.records.end(),
                   [](const FactRecord& a, const FactRecord& b) {
                     if ((a.role == FactRole::Direct) != (b.role == FactRole::Direct))
                       return a.role == FactRole::Direct;
                     return a.rank_score > b.rank_score;
                   });
  for (const FactRecord& r : out.records)
    out.sufficiency_flag = out.sufficiency_flag || r.role == FactRole::Direct;
  return out;
}

// The exact text handed to answer providers. One header line, then per
// record a FACT line, a TIME line when cues exist, and one EVIDENCE
// line per excerpt.
inline std::string render_fact_interface(const FactInterface& interface) {
  std::string out = "QUERY: " + interface.query + "\n";
  for (size_t i = 0; i < interface.records.size(); ++i) {
    const FactRecord& r = interface.records[i];
    out += "FACT[" + std::to_string(i + 1) + "] (" + to_string(r.role) + ") " +
           r.claim_text + "\n";
    if (!r.temporal_cues.empty()) {
      out += "TIME: ";
      for (size_t j = 0; j < r.temporal_cues.size(); ++j) {
        if (j) out += "; ";
        out += r.temporal_cues[j];
      }
      out += "\n";
    }
    for (const ProvenanceExcerpt& e : r.excerpts)
      out += "EVIDENCE: " + e.locator + " \"" + e.excerpt + "\"\n";
  }
  return out;
}

// Final composition. An interface with no direct record is returned as
// insufficient without invoking the provider; a composer failure is
// surfaced, never papered over with ungrounded text.
inline AnswerOutcome compose_answer(std::string_view query, const FactInterface& interface,
                                    AnswerComposer& composer, const UtilizationConfig& config) {
  if (interface.records.empty() || !interface.sufficiency_flag)
    return AnswerOutcome{true, ""};
  std::string rendered = render_fact_interface(interface);
  try {
    return detail::call_with_timeout(
        [&composer, query, &rendered] { return composer.compose(query, rendered); },
        config.provider_timeout_ms);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::ProviderFailure, std::string("composer: ") + e.what());
  }
}

} // namespace memir
