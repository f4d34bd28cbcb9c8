#pragma once
// Type-constrained projection of fused hits onto claims, then
// consolidation into candidate bundles. Non-claim atoms reach the
// candidate layer only through a claim's association set; hits that
// project to no claim are discarded (but kept for the trace).

#include <algorithm>
#include <map>
#include <unordered_map>
#include <vector>

#include "memir/retrieval.hpp"
#include "memir/store.hpp"

namespace memir {

struct CandidateBundle {
  AtomId claim_id; // bundle head; a non-claim atom only under ablation
  double rho = 0.0;
  std::vector<AtomId> closure;      // {o(h) : h in H_a} ∪ Ω_a, sorted
  std::vector<FusedHit> member_hits; // H_a in fused order
  bool claim_headed = true;
};

// Π(h): a claim hit maps to itself; any other hit maps to every claim
// whose association set contains it. Returned sorted ascending.
inline std::vector<AtomId> project_hit(const FusedHit& hit, const MemoryStore& store) {
  AtomKind kind = store.kind(hit.atom_id); // throws UnknownId
  if (kind == AtomKind::Claim) return {hit.atom_id};
  std::vector<AtomId> claims;
  for (AtomId claim_id : store.kind_ids(AtomKind::Claim)) {
    const std::vector<AtomId>& omega = store.association_set(claim_id);
    if (std::binary_search(omega.begin(), omega.end(), hit.atom_id))
      claims.push_back(claim_id);
  }
  return claims;
}

struct ProjectionResult {
  std::vector<CandidateBundle> bundles;  // sorted by rho desc, ties by claim id
  std::vector<AtomId> discarded_hits;    // hits with empty projection, fused order
};

inline ProjectionResult build_bundles(const std::vector<FusedHit>& fused,
                                      const MemoryStore& store) {
  // Reverse association index, one pass over claims.
  std::unordered_map<AtomId, std::vector<AtomId>, AtomIdHash> claims_of;
  for (AtomId claim_id : store.kind_ids(AtomKind::Claim))
    for (AtomId member : store.association_set(claim_id))
      claims_of[member].push_back(claim_id);

  std::map<AtomId, CandidateBundle> acc;
  auto bundle_for = [&acc, &store](AtomId claim_id) -> CandidateBundle& {
    CandidateBundle& b = acc[claim_id];
    if (!b.claim_id.valid()) {
      b.claim_id = claim_id;
      b.closure = store.association_set(claim_id); // Ω_a, sorted
    }
    return b;
  };

  ProjectionResult result;
  for (const FusedHit& hit : fused) {
    std::vector<AtomId> targets;
    if (store.kind(hit.atom_id) == AtomKind::Claim) {
      targets.push_back(hit.atom_id);
    } else if (auto it = claims_of.find(hit.atom_id); it != claims_of.end()) {
      targets = it->second;
    }
    if (targets.empty()) {
      result.discarded_hits.push_back(hit.atom_id);
      continue;
    }
    for (AtomId claim_id : targets) {
      CandidateBundle& b = bundle_for(claim_id);
      b.rho += hit.s_ret; // no score splitting across claims
      b.member_hits.push_back(hit);
      auto at = std::lower_bound(b.closure.begin(), b.closure.end(), hit.atom_id);
      if (at == b.closure.end() || *at != hit.atom_id) b.closure.insert(at, hit.atom_id);
    }
  }

  for (auto& [claim_id, bundle] : acc) result.bundles.push_back(std::move(bundle));
  std::sort(result.bundles.begin(), result.bundles.end(),
            [](const CandidateBundle& a, const CandidateBundle& b) {
              if (a.rho != b.rho) return a.rho > b.rho;
              return a.claim_id < b.claim_id;
            });
  return result;
}

} // namespace memir
