#pragma once
// MemoryStore: the validated atom collection. add_atom is the single
// admission gate; nothing enters the store without passing the support
// constraint and referential-integrity checks, no matter which
// provider produced it. After compilation the store is immutable and
// safe for concurrent readers.

#include <algorithm>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "memir/atoms.hpp"
#include "memir/errors.hpp"
#include "memir/ids.hpp"

namespace memir {

class MemoryStore {
public:
  MemoryStore() = default;
  explicit MemoryStore(ConversationMeta meta) : meta_(std::move(meta)) {}

  // Admits one atom. An unset id is allocated as the next local
  // ordinal of the atom's kind on its page (cues and claims sit on the
  // page of their first support span); an explicit id is honored as-is
  // when free, which is how persisted stores reload.
  AtomId add_atom(MemoryAtom atom) {
    validate(atom);
    AtomId id = id_of(atom);
    if (!id.valid()) {
      id = allocate_id(atom);
      std::visit([&](auto& a) { a.id = id; }, atom);
    } else {
      check_explicit_id(atom, id);
    }
    if (index_.count(id))
      throw Error(ErrorCode::DuplicateId, id.render());
    reserve_local(id);
    if (const auto* page = std::get_if<PageAtom>(&atom)) {
      note_page(*page, id);
    } else if (const auto* span = std::get_if<SpanAtom>(&atom)) {
      page_spans_[span->page_id.page_ordinal].push_back(id);
    } else if (const auto* claim = std::get_if<ClaimAtom>(&atom)) {
      association_sets_.emplace(id, omega_of(*claim));
    }
    index_.emplace(id, atoms_.size());
    atoms_.push_back(std::move(atom));
    return id;
  }

  bool contains(AtomId id) const { return index_.count(id) > 0; }

  const MemoryAtom& atom(AtomId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw Error(ErrorCode::UnknownId, id.render());
    return atoms_[it->second];
  }

  template <class T>
  const T& get(AtomId id) const {
    const T* a = std::get_if<T>(&atom(id));
    if (!a) throw Error(ErrorCode::InvalidAtom, id.render() + " has a different kind");
    return *a;
  }

  AtomKind kind(AtomId id) const { return kind_of(atom(id)); }

  // All atoms in admission order; the canonical iteration order.
  const std::vector<MemoryAtom>& atoms() const { return atoms_; }

  std::vector<AtomId> kind_ids(AtomKind kind) const {
    std::vector<AtomId> ids;
    for (const MemoryAtom& a : atoms_)
      if (kind_of(a) == kind) ids.push_back(id_of(a));
    return ids;
  }

  size_t size() const { return atoms_.size(); }

  // Page ids in admission order (equal to ordinal order).
  const std::vector<AtomId>& pages() const { return page_ids_; }

  // Span ids of one page in admission order (equal to char order for
  // compiled stores).
  const std::vector<AtomId>& spans_of_page(AtomId page_id) const {
    static const std::vector<AtomId> empty;
    auto it = page_spans_.find(page_id.page_ordinal);
    return it == page_spans_.end() ? empty : it->second;
  }

  // Omega of a claim: support spans plus linked cues, sorted, no
  // duplicates. Never contains pages or claims.
  const std::vector<AtomId>& association_set(AtomId claim_id) const {
    auto at = index_.find(claim_id);
    if (at == index_.end()) throw Error(ErrorCode::UnknownId, claim_id.render());
    if (kind_of(atoms_[at->second]) != AtomKind::Claim)
      throw Error(ErrorCode::NotAClaim, claim_id.render());
    return association_sets_.at(claim_id);
  }

  const std::vector<RetrievalView>& views() const { return views_; }

  void add_view(RetrievalView view) {
    auto owner = index_.find(view.owner_atom_id);
    if (owner == index_.end())
      throw Error(ErrorCode::DanglingReference,
                  "view " + view.view_id + " owner " + view.owner_atom_id.render());
    if (kind_of(atoms_[owner->second]) != owner_kind_of(view.view_kind))
      throw Error(ErrorCode::InvalidAtom,
                  "view " + view.view_id + " kind does not match its owner");
    for (AtomId target : view.target_claim_ids) {
      auto it = index_.find(target);
      if (it == index_.end())
        throw Error(ErrorCode::DanglingReference,
                    "view " + view.view_id + " target " + target.render());
      if (kind_of(atoms_[it->second]) != AtomKind::Claim)
        throw Error(ErrorCode::NotAClaim,
                    "view " + view.view_id + " target " + target.render());
    }
    views_.push_back(std::move(view));
  }

  void clear_views() { views_.clear(); }

  const ConversationMeta& meta() const { return meta_; }
  void set_meta(ConversationMeta meta) { meta_ = std::move(meta); }

private:
  static bool sorted_contains(const std::vector<AtomId>& ids, AtomId id) {
    return std::binary_search(ids.begin(), ids.end(), id);
  }

  const SpanAtom* span_if_stored(AtomId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return nullptr;
    return std::get_if<SpanAtom>(&atoms_[it->second]);
  }

  // Support lists must cite stored spans and nothing else.
  void check_support(const std::vector<AtomId>& support, const char* what) const {
    if (support.empty())
      throw Error(ErrorCode::SupportViolation, std::string(what) + " with empty support");
    for (AtomId sid : support) {
      auto it = index_.find(sid);
      if (it == index_.end())
        throw Error(ErrorCode::DanglingReference,
                    std::string(what) + " cites missing " + sid.render());
      if (kind_of(atoms_[it->second]) != AtomKind::Span)
        throw Error(ErrorCode::SupportViolation,
                    std::string(what) + " cites non-span " + sid.render());
    }
  }

  void validate(const MemoryAtom& atom) const {
    struct Visitor {
      const MemoryStore& store;

      void operator()(const PageAtom& page) const {
        if (page.turn_range.last < page.turn_range.first)
          throw Error(ErrorCode::InvalidAtom, "page turn_range out of order");
        if (!store.page_ids_.empty()) {
          const PageAtom& prev = store.get<PageAtom>(store.page_ids_.back());
          if (page.turn_range.first <= prev.turn_range.last)
            throw Error(ErrorCode::InvalidAtom,
                        "page turn ranges must be disjoint and ascending");
        }
      }

      void operator()(const SpanAtom& span) const {
        auto it = store.index_.find(span.page_id);
        if (it == store.index_.end())
          throw Error(ErrorCode::DanglingReference, "span cites missing page " + span.page_id.render());
        const PageAtom* page = std::get_if<PageAtom>(&store.atoms_[it->second]);
        if (!page)
          throw Error(ErrorCode::InvalidAtom, "span page_id is not a page");
        if (span.char_range.begin >= span.char_range.end ||
            span.char_range.end > page->raw_text.size())
          throw Error(ErrorCode::InvalidAtom, "span char_range out of page bounds");
        std::string_view slice{page->raw_text};
        slice = slice.substr(span.char_range.begin, span.char_range.end - span.char_range.begin);
        if (slice != span.verbatim_text)
          throw Error(ErrorCode::InvalidAtom, "span verbatim_text differs from page slice");
      }

      void operator()(const HandleAtom& handle) const {
        store.check_support(handle.support_span_ids, "handle");
        if (handle.surface_text.empty() || !store.cited_substring(handle.support_span_ids, handle.surface_text))
          throw Error(ErrorCode::InvalidAtom,
                      "handle surface_text is not a substring of any cited span");
      }

      void operator()(const TimeAtom& time) const {
        store.check_support(time.support_span_ids, "time");
        if (!time.normalized && !time.relative_expression)
          throw Error(ErrorCode::InvalidAtom,
                      "time atom needs a normalized interval or a relative expression");
      }

      void operator()(const PivotAtom& pivot) const {
        store.check_support(pivot.support_span_ids, "pivot");
        if (pivot.support_text.empty() || !store.cited_substring(pivot.support_span_ids, pivot.support_text))
          throw Error(ErrorCode::InvalidAtom,
                      "pivot support_text is not a substring of any cited span");
      }

      void operator()(const ClaimAtom& claim) const {
        if (claim.support_span_ids.empty() || claim.support_span_ids.size() > 3)
          throw Error(ErrorCode::SupportViolation,
                      "claim must cite 1 to 3 support spans");
        store.check_support(claim.support_span_ids, "claim");
        if (claim.claim_text.empty())
          throw Error(ErrorCode::InvalidAtom, "claim with empty text");
        for (AtomId cue : claim.linked_cue_ids) {
          auto it = store.index_.find(cue);
          if (it == store.index_.end())
            throw Error(ErrorCode::DanglingReference, "claim links missing cue " + cue.render());
          AtomKind kind = kind_of(store.atoms_[it->second]);
          if (kind != AtomKind::Handle && kind != AtomKind::Time && kind != AtomKind::Pivot)
            throw Error(ErrorCode::InvalidAtom,
                        "claim links non-cue atom " + cue.render());
        }
      }
    };
    std::visit(Visitor{*this}, atom);
  }

  bool cited_substring(const std::vector<AtomId>& support, std::string_view needle) const {
    for (AtomId sid : support) {
      if (const SpanAtom* span = span_if_stored(sid))
        if (span->verbatim_text.find(needle) != std::string::npos) return true;
    }
    return false;
  }

  AtomId allocate_id(const MemoryAtom& atom) {
    AtomKind kind = kind_of(atom);
    uint32_t page = 0;
    if (kind == AtomKind::Page) {
      page = page_ids_.empty() ? 0 : page_ids_.back().page_ordinal + 1;
      return AtomId{kind, page, 0};
    }
    if (const auto* span = std::get_if<SpanAtom>(&atom)) {
      page = span->page_id.page_ordinal;
    } else {
      // Cues and claims sit on the page of their first support span.
      page = support_of(atom).front().page_ordinal;
    }
    uint32_t local = 0;
    auto it = next_local_.find(local_key(kind, page));
    if (it != next_local_.end()) local = it->second;
    return AtomId{kind, page, local};
  }

  void check_explicit_id(const MemoryAtom& atom, AtomId id) const {
    if (id.kind != kind_of(atom))
      throw Error(ErrorCode::InvalidAtom, "id kind tag differs from atom kind: " + id.render());
    if (const auto* span = std::get_if<SpanAtom>(&atom)) {
      if (id.page_ordinal != span->page_id.page_ordinal)
        throw Error(ErrorCode::InvalidAtom, "span id is not on its page: " + id.render());
    } else if (const auto* claim = std::get_if<ClaimAtom>(&atom)) {
      // The claim's own page is named by its id; one support span must
      // live there.
      bool on_page = false;
      for (AtomId sid : claim->support_span_ids)
        on_page = on_page || sid.page_ordinal == id.page_ordinal;
      if (!on_page)
        throw Error(ErrorCode::SupportViolation,
                    "claim " + id.render() + " has no support span on its own page");
    } else if (const auto* page = std::get_if<PageAtom>(&atom)) {
      (void)page;
      if (id.local_ordinal != 0)
        throw Error(ErrorCode::InvalidAtom, "page ids use local ordinal 0: " + id.render());
      if (!page_ids_.empty() && id.page_ordinal <= page_ids_.back().page_ordinal)
        throw Error(ErrorCode::InvalidAtom, "page ordinals must ascend: " + id.render());
    }
  }

  void note_page(const PageAtom&, AtomId id) { page_ids_.push_back(id); }

  static uint64_t local_key(AtomKind kind, uint32_t page) {
    return (static_cast<uint64_t>(static_cast<unsigned char>(static_cast<char>(kind))) << 32) | page;
  }

  void reserve_local(AtomId id) {
    uint64_t key = local_key(id.kind, id.page_ordinal);
    uint32_t& next = next_local_[key];
    next = std::max(next, id.local_ordinal + 1);
  }

  std::vector<AtomId> omega_of(const ClaimAtom& claim) const {
    std::vector<AtomId> omega = claim.support_span_ids;
    omega.insert(omega.end(), claim.linked_cue_ids.begin(), claim.linked_cue_ids.end());
    std::sort(omega.begin(), omega.end());
    omega.erase(std::unique(omega.begin(), omega.end()), omega.end());
    return omega;
  }

  std::vector<MemoryAtom> atoms_;
  std::unordered_map<AtomId, size_t, AtomIdHash> index_;
  std::vector<RetrievalView> views_;
  std::unordered_map<AtomId, std::vector<AtomId>, AtomIdHash> association_sets_;
  std::unordered_map<uint64_t, uint32_t> next_local_;
  std::vector<AtomId> page_ids_;
  std::unordered_map<uint32_t, std::vector<AtomId>> page_spans_;
  ConversationMeta meta_;
};

} // namespace memir
