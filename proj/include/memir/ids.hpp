#pragma once
// Atom identifiers: `{kind}{page}:{local}`, e.g. C23:01 is the second
// claim written for page 23. Ids are assigned once and never reused.

#include <compare>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "memir/errors.hpp"

namespace memir {

enum class AtomKind : char {
  Page = 'P',
  Span = 'S',
  Handle = 'H',
  Time = 'T',
  Pivot = 'V',
  Claim = 'C',
};

inline bool is_atom_kind_tag(char c) {
  return c == 'P' || c == 'S' || c == 'H' || c == 'T' || c == 'V' || c == 'C';
}

inline const char* to_string(AtomKind kind) {
  switch (kind) {
    case AtomKind::Page: return "page";
    case AtomKind::Span: return "span";
    case AtomKind::Handle: return "handle";
    case AtomKind::Time: return "time";
    case AtomKind::Pivot: return "pivot";
    case AtomKind::Claim: return "claim";
  }
  return "unknown";
}

struct AtomId {
  // '\0' kind marks the unset id; stores assign ordinals on insert.
  AtomKind kind = static_cast<AtomKind>(0);
  uint32_t page_ordinal = 0;
  uint32_t local_ordinal = 0;

  bool valid() const { return is_atom_kind_tag(static_cast<char>(kind)); }

  // Canonical ordering: kind tag, then page, then local ordinal.
  auto operator<=>(const AtomId&) const = default;

  // Rendered form, local ordinal zero-padded to at least two digits.
  std::string render() const {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%c%u:%02u", static_cast<char>(kind),
                  page_ordinal, local_ordinal);
    return buf;
  }

  static std::optional<AtomId> try_parse(std::string_view text) {
    if (text.size() < 4 || !is_atom_kind_tag(text[0])) return std::nullopt;
    size_t colon = text.find(':');
    if (colon == std::string_view::npos || colon < 2 || colon + 1 >= text.size())
      return std::nullopt;
    uint64_t page = 0, local = 0;
    for (size_t i = 1; i < colon; ++i) {
      if (text[i] < '0' || text[i] > '9') return std::nullopt;
      page = page * 10 + static_cast<uint64_t>(text[i] - '0');
      if (page > 0xFFFFFFFFull) return std::nullopt;
    }
    for (size_t i = colon + 1; i < text.size(); ++i) {
      if (text[i] < '0' || text[i] > '9') return std::nullopt;
      local = local * 10 + static_cast<uint64_t>(text[i] - '0');
      if (local > 0xFFFFFFFFull) return std::nullopt;
    }
    // Local part is rendered with at least two digits.
    if (text.size() - colon - 1 < 2) return std::nullopt;
    AtomId id;
    id.kind = static_cast<AtomKind>(text[0]);
    id.page_ordinal = static_cast<uint32_t>(page);
    id.local_ordinal = static_cast<uint32_t>(local);
    return id;
  }

  static AtomId parse(std::string_view text) {
    auto id = try_parse(text);
    if (!id) throw Error(ErrorCode::ParseError, "malformed atom id '" + std::string(text) + "'");
    return *id;
  }

  uint64_t pack() const {
    return (static_cast<uint64_t>(static_cast<unsigned char>(kind)) << 56) |
           (static_cast<uint64_t>(page_ordinal) << 28) |
           (static_cast<uint64_t>(local_ordinal) & 0x0FFFFFFFull);
  }
};

struct AtomIdHash {
  size_t operator()(const AtomId& id) const {
    return std::hash<uint64_t>{}(id.pack());
  }
};

} // namespace memir
