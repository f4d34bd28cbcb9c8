#pragma once
// Store persistence: UTF-8 line-delimited JSON, one atom or view per
// line, header record first. Records reload through the same admission
// gate used at compile time, so a corrupt file can never produce a
// store that violates the support constraint. Serialization is
// canonical: load then persist reproduces the file byte for byte.

#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "memir/store.hpp"

namespace memir {

using OrderedJson = nlohmann::ordered_json;

inline constexpr int kStoreFormatVersion = 1;

namespace detail {

inline OrderedJson id_list(const std::vector<AtomId>& ids) {
  OrderedJson out = OrderedJson::array();
  for (AtomId id : ids) out.push_back(id.render());
  return out;
}

inline OrderedJson atom_record(const MemoryAtom& atom) {
  struct Visitor {
    OrderedJson operator()(const PageAtom& a) const {
      OrderedJson j;
      j["id"] = a.id.render();
      j["session_key"] = a.session_key;
      j["turn_range"] = {a.turn_range.first, a.turn_range.last};
      j["raw_text"] = a.raw_text;
      if (a.timestamp_hint) j["timestamp_hint"] = a.timestamp_hint->iso();
      return j;
    }
    OrderedJson operator()(const SpanAtom& a) const {
      OrderedJson j;
      j["id"] = a.id.render();
      j["page_id"] = a.page_id.render();
      j["speaker"] = a.speaker;
      j["char_range"] = {a.char_range.begin, a.char_range.end};
      j["verbatim_text"] = a.verbatim_text;
      return j;
    }
    OrderedJson operator()(const HandleAtom& a) const {
      OrderedJson j;
      j["id"] = a.id.render();
      j["surface_text"] = a.surface_text;
      j["support_span_ids"] = id_list(a.support_span_ids);
      return j;
    }
    OrderedJson operator()(const TimeAtom& a) const {
      OrderedJson j;
      j["id"] = a.id.render();
      j["surface_text"] = a.surface_text;
      if (a.normalized) {
        j["normalized"] = {{"start", a.normalized->start.iso()},
                           {"end", a.normalized->end.iso()}};
      }
      if (a.relative_expression) j["relative_expression"] = *a.relative_expression;
      j["support_span_ids"] = id_list(a.support_span_ids);
      return j;
    }
    OrderedJson operator()(const PivotAtom& a) const {
      OrderedJson j;
      j["id"] = a.id.render();
      j["referent_label"] = a.referent_label;
      j["support_span_ids"] = id_list(a.support_span_ids);
      j["support_text"] = a.support_text;
      return j;
    }
    OrderedJson operator()(const ClaimAtom& a) const {
      OrderedJson j;
      j["id"] = a.id.render();
      j["claim_text"] = a.claim_text;
      j["support_span_ids"] = id_list(a.support_span_ids);
      j["linked_cue_ids"] = id_list(a.linked_cue_ids);
      return j;
    }
  };
  return std::visit(Visitor{}, atom);
}

inline OrderedJson view_record(const RetrievalView& view) {
  OrderedJson j;
  j["view_id"] = view.view_id;
  j["owner_atom_id"] = view.owner_atom_id.render();
  j["view_kind"] = to_string(view.view_kind);
  j["key_text"] = view.key_text;
  j["target_claim_ids"] = id_list(view.target_claim_ids);
  return j;
}

// Strict schema: every key must be known, every required key present.
inline void check_keys(const OrderedJson& j, std::initializer_list<const char*> required,
                       std::initializer_list<const char*> optional) {
  auto known = [&](const std::string& key) {
    for (const char* k : required)
      if (key == k) return true;
    for (const char* k : optional)
      if (key == k) return true;
    return false;
  };
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known(it.key()))
      throw Error(ErrorCode::CorruptRecord, "unknown field '" + it.key() + "'");
  for (const char* k : required)
    if (!j.contains(k))
      throw Error(ErrorCode::CorruptRecord, std::string("missing field '") + k + "'");
}

inline std::vector<AtomId> parse_id_list(const OrderedJson& j) {
  std::vector<AtomId> ids;
  for (const auto& entry : j) ids.push_back(AtomId::parse(entry.get<std::string>()));
  return ids;
}

inline MemoryAtom parse_atom_record(const OrderedJson& j) {
  AtomId id = AtomId::parse(j.at("id").get<std::string>());
  switch (id.kind) {
    case AtomKind::Page: {
      check_keys(j, {"id", "session_key", "turn_range", "raw_text"}, {"timestamp_hint"});
      PageAtom a;
      a.id = id;
      a.session_key = j.at("session_key").get<std::string>();
      a.turn_range = {j.at("turn_range").at(0).get<uint32_t>(),
                      j.at("turn_range").at(1).get<uint32_t>()};
      a.raw_text = j.at("raw_text").get<std::string>();
      if (j.contains("timestamp_hint")) {
        auto hint = CivilDateTime::parse_iso(j.at("timestamp_hint").get<std::string>());
        if (!hint) throw Error(ErrorCode::CorruptRecord, "bad timestamp_hint");
        a.timestamp_hint = *hint;
      }
      return a;
    }
    case AtomKind::Span: {
      check_keys(j, {"id", "page_id", "speaker", "char_range", "verbatim_text"}, {});
      SpanAtom a;
      a.id = id;
      a.page_id = AtomId::parse(j.at("page_id").get<std::string>());
      a.speaker = j.at("speaker").get<std::string>();
      a.char_range = {j.at("char_range").at(0).get<uint32_t>(),
                      j.at("char_range").at(1).get<uint32_t>()};
      a.verbatim_text = j.at("verbatim_text").get<std::string>();
      return a;
    }
    case AtomKind::Handle: {
      check_keys(j, {"id", "surface_text", "support_span_ids"}, {});
      HandleAtom a;
      a.id = id;
      a.surface_text = j.at("surface_text").get<std::string>();
      a.support_span_ids = parse_id_list(j.at("support_span_ids"));
      return a;
    }
    case AtomKind::Time: {
      check_keys(j, {"id", "surface_text", "support_span_ids"},
                 {"normalized", "relative_expression"});
      TimeAtom a;
      a.id = id;
      a.surface_text = j.at("surface_text").get<std::string>();
      if (j.contains("normalized")) {
        const OrderedJson& n = j.at("normalized");
        check_keys(n, {"start", "end"}, {});
        auto start = CivilDate::parse_iso(n.at("start").get<std::string>());
        auto end = CivilDate::parse_iso(n.at("end").get<std::string>());
        if (!start || !end || *end < *start)
          throw Error(ErrorCode::CorruptRecord, "bad normalized interval");
        a.normalized = DateInterval{*start, *end};
      }
      if (j.contains("relative_expression"))
        a.relative_expression = j.at("relative_expression").get<std::string>();
      a.support_span_ids = parse_id_list(j.at("support_span_ids"));
      return a;
    }
    case AtomKind::Pivot: {
      check_keys(j, {"id", "referent_label", "support_span_ids", "support_text"}, {});
      PivotAtom a;
      a.id = id;
      a.referent_label = j.at("referent_label").get<std::string>();
      a.support_span_ids = parse_id_list(j.at("support_span_ids"));
      a.support_text = j.at("support_text").get<std::string>();
      return a;
    }
    case AtomKind::Claim: {
      check_keys(j, {"id", "claim_text", "support_span_ids", "linked_cue_ids"}, {});
      ClaimAtom a;
      a.id = id;
      a.claim_text = j.at("claim_text").get<std::string>();
      a.support_span_ids = parse_id_list(j.at("support_span_ids"));
      a.linked_cue_ids = parse_id_list(j.at("linked_cue_ids"));
      return a;
    }
  }
  throw Error(ErrorCode::CorruptRecord, "unrecognized atom kind");
}

inline RetrievalView parse_view_record(const OrderedJson& j) {
  check_keys(j, {"view_id", "owner_atom_id", "view_kind", "key_text", "target_claim_ids"}, {});
  RetrievalView view;
  view.view_id = j.at("view_id").get<std::string>();
  view.owner_atom_id = AtomId::parse(j.at("owner_atom_id").get<std::string>());
  auto kind = view_kind_from_string(j.at("view_kind").get<std::string>());
  if (!kind)
    throw Error(ErrorCode::CorruptRecord,
                "unknown view_kind '" + j.at("view_kind").get<std::string>() + "'");
  view.view_kind = *kind;
  view.key_text = j.at("key_text").get<std::string>();
  view.target_claim_ids = parse_id_list(j.at("target_claim_ids"));
  return view;
}

} // namespace detail

inline std::string serialize_store(const MemoryStore& store) {
  std::string out;
  OrderedJson header;
  header["format_version"] = kStoreFormatVersion;
  header["conversation_meta"] = {{"conversation_id", store.meta().conversation_id},
                                 {"source", store.meta().source}};
  out += header.dump();
  out += '\n';
  for (const MemoryAtom& atom : store.atoms()) {
    out += detail::atom_record(atom).dump();
    out += '\n';
  }
  for (const RetrievalView& view : store.views()) {
    out += detail::view_record(view).dump();
    out += '\n';
  }
  return out;
}

inline MemoryStore parse_store(std::istream& in) {
  std::string line;
  size_t line_no = 0;
  auto fail = [&](const std::string& why) -> Error {
    return Error(ErrorCode::CorruptRecord, "line " + std::to_string(line_no) + ": " + why);
  };

  if (!std::getline(in, line)) throw Error(ErrorCode::CorruptRecord, "empty store file");
  line_no = 1;
  OrderedJson header;
  try {
    header = OrderedJson::parse(line);
    detail::check_keys(header, {"format_version", "conversation_meta"}, {});
  } catch (const Error& e) {
    throw fail(e.what());
  } catch (const std::exception& e) {
    throw fail(e.what());
  }
  int version = header.at("format_version").is_number_integer()
                    ? header.at("format_version").get<int>()
                    : -1;
  if (version != kStoreFormatVersion)
    throw Error(ErrorCode::VersionMismatch,
                "store format " + header.at("format_version").dump() + ", expected " +
                    std::to_string(kStoreFormatVersion));

  MemoryStore store;
  try {
    const OrderedJson& meta = header.at("conversation_meta");
    detail::check_keys(meta, {"conversation_id", "source"}, {});
    store.set_meta(ConversationMeta{meta.at("conversation_id").get<std::string>(),
                                    meta.at("source").get<std::string>()});
  } catch (const Error& e) {
    throw fail(e.what());
  } catch (const std::exception& e) {
    throw fail(e.what());
  }

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      OrderedJson record = OrderedJson::parse(line);
      if (!record.is_object()) throw fail("record is not an object");
      if (record.contains("view_id"))
        store.add_view(detail::parse_view_record(record));
      else
        store.add_atom(detail::parse_atom_record(record));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::CorruptRecord &&
          std::string(e.what()).find("line ") != std::string::npos)
        throw;
      throw fail(e.what());
    } catch (const std::exception& e) {
      throw fail(e.what());
    }
  }
  return store;
}

inline void persist(const MemoryStore& store, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  out << serialize_store(store);
  if (!out) throw Error(ErrorCode::IoError, "short write to '" + path + "'");
}

inline MemoryStore load_store(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read '" + path + "'");
  return parse_store(in);
}

} // namespace memir
