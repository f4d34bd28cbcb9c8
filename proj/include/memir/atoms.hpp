#pragma once
// The six atom kinds plus retrieval views. Atoms are plain records;
// all validation lives in the store (store.hpp), which is the only
// component allowed to admit them.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "memir/dates.hpp"
#include "memir/ids.hpp"

namespace memir {

// Inclusive pair of global turn indices.
struct TurnRange {
  uint32_t first = 0;
  uint32_t last = 0;
  auto operator<=>(const TurnRange&) const = default;
};

// Half-open byte range into a page's raw_text.
struct CharRange {
  uint32_t begin = 0;
  uint32_t end = 0;
  auto operator<=>(const CharRange&) const = default;
};

struct PageAtom {
  AtomId id;
  std::string session_key;
  TurnRange turn_range;
  std::string raw_text;
  std::optional<CivilDateTime> timestamp_hint;
  bool operator==(const PageAtom&) const = default;
};

struct SpanAtom {
  AtomId id;
  AtomId page_id;
  std::string speaker;
  CharRange char_range;
  std::string verbatim_text; // byte-equal to the page substring at char_range
  bool operator==(const SpanAtom&) const = default;
};

struct HandleAtom {
  AtomId id;
  std::string surface_text; // exact substring of some cited span
  std::vector<AtomId> support_span_ids;
  bool operator==(const HandleAtom&) const = default;
};

struct TimeAtom {
  AtomId id;
  std::string surface_text;
  std::optional<DateInterval> normalized;
  std::optional<std::string> relative_expression;
  std::vector<AtomId> support_span_ids;
  bool operator==(const TimeAtom&) const = default;
};

struct PivotAtom {
  AtomId id;
  std::string referent_label;
  std::vector<AtomId> support_span_ids;
  std::string support_text; // exact substring of a cited span
  bool operator==(const PivotAtom&) const = default;
};

struct ClaimAtom {
  AtomId id;
  std::string claim_text; // one standalone sentence
  std::vector<AtomId> support_span_ids; // 1 to 3 spans, one on the claim's page
  std::vector<AtomId> linked_cue_ids;   // handles, times, pivots only
  bool operator==(const ClaimAtom&) const = default;
};

using MemoryAtom =
    std::variant<PageAtom, SpanAtom, HandleAtom, TimeAtom, PivotAtom, ClaimAtom>;

inline AtomId id_of(const MemoryAtom& atom) {
  return std::visit([](const auto& a) { return a.id; }, atom);
}

inline AtomKind kind_of(const MemoryAtom& atom) {
  switch (atom.index()) {
    case 0: return AtomKind::Page;
    case 1: return AtomKind::Span;
    case 2: return AtomKind::Handle;
    case 3: return AtomKind::Time;
    case 4: return AtomKind::Pivot;
    default: return AtomKind::Claim;
  }
}

// Support set as written in the atom record. Pages have none; spans
// ground themselves.
inline std::vector<AtomId> support_of(const MemoryAtom& atom) {
  struct Visitor {
    std::vector<AtomId> operator()(const PageAtom&) const { return {}; }
    std::vector<AtomId> operator()(const SpanAtom& a) const { return {a.id}; }
    std::vector<AtomId> operator()(const HandleAtom& a) const { return a.support_span_ids; }
    std::vector<AtomId> operator()(const TimeAtom& a) const { return a.support_span_ids; }
    std::vector<AtomId> operator()(const PivotAtom& a) const { return a.support_span_ids; }
    std::vector<AtomId> operator()(const ClaimAtom& a) const { return a.support_span_ids; }
  };
  return std::visit(Visitor{}, atom);
}

enum class ViewKind {
  ClaimText,
  SpanText,
  HandleAlias,
  TimeKey,
  PivotKey,
  SpanContext,
};

inline const char* to_string(ViewKind kind) {
  switch (kind) {
    case ViewKind::ClaimText: return "claim_text";
    case ViewKind::SpanText: return "span_text";
    case ViewKind::HandleAlias: return "handle_alias";
    case ViewKind::TimeKey: return "time_key";
    case ViewKind::PivotKey: return "pivot_key";
    case ViewKind::SpanContext: return "span_context";
  }
  return "?";
}

inline std::optional<ViewKind> view_kind_from_string(std::string_view name) {
  if (name == "claim_text") return ViewKind::ClaimText;
  if (name == "span_text") return ViewKind::SpanText;
  if (name == "handle_alias") return ViewKind::HandleAlias;
  if (name == "time_key") return ViewKind::TimeKey;
  if (name == "pivot_key") return ViewKind::PivotKey;
  if (name == "span_context") return ViewKind::SpanContext;
  return std::nullopt;
}

// Owner kind a view kind is derived from.
inline AtomKind owner_kind_of(ViewKind kind) {
  switch (kind) {
    case ViewKind::ClaimText: return AtomKind::Claim;
    case ViewKind::SpanText:
    case ViewKind::SpanContext: return AtomKind::Span;
    case ViewKind::HandleAlias: return AtomKind::Handle;
    case ViewKind::TimeKey: return AtomKind::Time;
    case ViewKind::PivotKey: return AtomKind::Pivot;
  }
  return AtomKind::Claim;
}

struct RetrievalView {
  std::string view_id;
  AtomId owner_atom_id;
  ViewKind view_kind = ViewKind::ClaimText;
  std::string key_text;
  std::vector<AtomId> target_claim_ids;
  bool operator==(const RetrievalView&) const = default;
};

struct ConversationMeta {
  std::string conversation_id;
  std::string source;
  bool operator==(const ConversationMeta&) const = default;
};

} // namespace memir
