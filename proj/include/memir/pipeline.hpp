#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "memir/compile.hpp"
#include "memir/profiles.hpp"
#include "memir/projection.hpp"
#include "memir/retrieval.hpp"
#include "memir/trace.hpp"
#include "memir/utilization.hpp"

namespace memir {

// Structure removal for ablated runs. Atoms are re-admitted in the
// source admission order, so surviving atoms keep their ids.
inline MemoryStore ablate_store(const MemoryStore& source, const AblationFlags& flags) {
  if (!flags.no_cues && !flags.no_claims) return source;
  MemoryStore out;
  out.set_meta(source.meta());
  for (const MemoryAtom& atom : source.atoms()) {
    MemoryAtom copy = atom;
    AtomKind kind = kind_of(copy);
    if (flags.no_cues &&
        (kind == AtomKind::Handle || kind == AtomKind::Time || kind == AtomKind::Pivot))
      continue;
    if (flags.no_claims && kind == AtomKind::Claim) continue;
    std::visit([&](auto& a) { a.id = AtomId{}; }, copy);
    if (flags.no_cues && kind == AtomKind::Claim)
      std::get<ClaimAtom>(copy).linked_cue_ids.clear();
    out.add_atom(std::move(copy));
  }
  for (RetrievalView& view : build_views(out)) out.add_view(std::move(view));
  return out;
}

struct QueryResponse {
  RetrievalResult retrieval;
  ProjectionResult projection; // bundles after any ablation shaping
  RerankOutcome reranked;
  SelectionOutcome selection;
  FactInterface facts;
  AnswerOutcome answer;
  QueryTrace trace;
};

// One compiled store, one profile, the full query path. Construction
// applies ablations and builds the route indexes once.
class QueryEngine {
public:
  QueryEngine(const MemoryStore& source, ProviderSet providers, PipelineProfile profile)
      : providers_(std::move(providers)),
        profile_(std::move(profile)),
        store_(ablate_store(source, profile_.ablation)),
        indexes_(build_indexes(store_, providers_.embedder, profile_.retrieval)) {}

  const MemoryStore& store() const { return store_; }
  const PipelineProfile& profile() const { return profile_; }
  const RetrievalIndexes& indexes() const { return indexes_; }

  QueryResponse run(std::string_view question) const {
    QueryResponse r;
    r.retrieval = retrieve(question, indexes_, profile_.retrieval);
    r.projection = shape_bundles(r.retrieval.fused);
    r.reranked = rerank_pool(r.projection.bundles, question, *providers_.scorer, store_,
                             profile_.utilization);
    r.selection = select_bundles(r.reranked.kept, question, *providers_.selector, store_,
                                 profile_.utilization);
    r.facts = build_fact_interface(r.selection.selected, question, store_,
                                   profile_.utilization.serialization_caps);
    r.answer = compose_answer(question, r.facts, *providers_.composer, profile_.utilization);
    r.trace = make_trace(question, r);
    return r;
  }

private:
  // no_claims heads bundles with spans (cue hits spread to their
  // support spans); no_projection heads each hit with its own owner.
  // Either way closures stay minimal and bundles are marked non-claim
  // where the head is not a claim.
  ProjectionResult shape_bundles(const std::vector<FusedHit>& fused) const {
    const AblationFlags& flags = profile_.ablation;
    if (!flags.no_claims && !flags.no_projection) {
      ProjectionResult out = build_bundles(fused, store_);
      if (flags.no_bundles)
        for (CandidateBundle& b : out.bundles) b.closure = {b.claim_id};
      return out;
    }

    ProjectionResult out;
    std::map<AtomId, CandidateBundle> acc;
    for (const FusedHit& hit : fused) {
      std::vector<AtomId> heads;
      if (flags.no_claims && !flags.no_projection &&
          hit.atom_id.kind != AtomKind::Span) {
        heads = detail::head_support(hit.atom_id, store_);
      } else {
        heads = {hit.atom_id};
      }
      for (AtomId head : heads) {
        CandidateBundle& b = acc[head];
        if (!b.claim_id.valid()) {
          b.claim_id = head;
          b.claim_headed = head.kind == AtomKind::Claim;
          b.closure = {head};
        }
        b.rho += hit.s_ret;
        if (!std::binary_search(b.closure.begin(), b.closure.end(), hit.atom_id))
          b.closure.insert(
              std::lower_bound(b.closure.begin(), b.closure.end(), hit.atom_id),
              hit.atom_id);
        b.member_hits.push_back(hit);
      }
    }
    for (auto& [head, bundle] : acc) {
      if (flags.no_bundles) bundle.closure = {head};
      out.bundles.push_back(std::move(bundle));
    }
    std::sort(out.bundles.begin(), out.bundles.end(),
              [](const CandidateBundle& a, const CandidateBundle& b) {
                if (a.rho != b.rho) return a.rho > b.rho;
                return a.claim_id < b.claim_id;
              });
    return out;
  }

  QueryTrace make_trace(std::string_view question, const QueryResponse& r) const {
    QueryTrace t;
    t.query = std::string(question);
    t.profile_name = profile_.name;
    t.ablation = profile_.ablation;
    t.rrf_k = profile_.retrieval.rrf_k;
    t.per_route_k = profile_.retrieval.per_route_k;
    t.pool_m = profile_.utilization.pool_m;
    t.rerank_keep_k = profile_.utilization.rerank_keep_k;
    t.select_budget_x = profile_.utilization.select_budget_x;
    t.route_hits = r.retrieval.route_hits;
    t.fused = r.retrieval.fused;
    for (const CandidateBundle& b : r.projection.bundles) {
      TraceBundle tb;
      tb.head = b.claim_id;
      tb.claim_headed = b.claim_headed;
      tb.rho = b.rho;
      tb.closure = b.closure;
      for (const FusedHit& hit : b.member_hits) tb.members.push_back(hit.atom_id);
      t.bundles.push_back(std::move(tb));
    }
    t.discarded = r.projection.discarded_hits;
    t.scorer_fallback = r.reranked.scorer_fallback;
    for (const RerankedBundle& rb : r.reranked.kept)
      t.reranked.push_back(TraceRerank{rb.bundle.claim_id, rb.rank_score, rb.bundle.rho});
    t.selector_fallback = r.selection.selector_fallback;
    for (const SelectedBundle& sb : r.selection.selected)
      t.selected.push_back(TraceSelect{sb.bundle.claim_id, sb.role, sb.rank_score});
    t.fact_count = r.facts.records.size();
    t.sufficient = r.facts.sufficiency_flag;
    t.answer_insufficient = r.answer.insufficient;
    return t;
  }

  ProviderSet providers_;
  PipelineProfile profile_;
  MemoryStore store_;
  RetrievalIndexes indexes_;
};

} // namespace memir
