#pragma once
// Multi-route retrieval: five sparse BM25 routes over retrieval views,
// two dense routes over claim and span text, reciprocal rank fusion
// into one scored atom-level hit set. Indexes are immutable once
// built; queries run read-only and may fan out one task per route.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <future>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "memir/bm25.hpp"
#include "memir/providers.hpp"
#include "memir/store.hpp"
#include "memir/temporal.hpp"
#include "memir/text.hpp"

namespace memir {

enum class RouteId {
  SparseClaim,
  SparseSpan,
  SparseHandle,
  SparseTime,
  SparsePivot,
  DenseClaim,
  DenseSpan,
};

inline constexpr std::array<RouteId, 7> kAllRoutes = {
    RouteId::SparseClaim, RouteId::SparseSpan,  RouteId::SparseHandle, RouteId::SparseTime,
    RouteId::SparsePivot, RouteId::DenseClaim,  RouteId::DenseSpan,
};

inline constexpr std::array<RouteId, 5> kSparseRoutes = {
    RouteId::SparseClaim, RouteId::SparseSpan, RouteId::SparseHandle,
    RouteId::SparseTime,  RouteId::SparsePivot,
};

inline bool is_sparse(RouteId route) {
  return route != RouteId::DenseClaim && route != RouteId::DenseSpan;
}

inline const char* to_string(RouteId route) {
  switch (route) {
    case RouteId::SparseClaim: return "sparse_claim";
    case RouteId::SparseSpan: return "sparse_span";
    case RouteId::SparseHandle: return "sparse_handle";
    case RouteId::SparseTime: return "sparse_time";
    case RouteId::SparsePivot: return "sparse_pivot";
    case RouteId::DenseClaim: return "dense_claim";
    case RouteId::DenseSpan: return "dense_span";
  }
  return "unknown";
}

inline RouteId route_from_string(std::string_view name) {
  for (RouteId route : kAllRoutes)
    if (name == to_string(route)) return route;
  throw Error(ErrorCode::UnknownRoute, "no route named '" + std::string(name) + "'");
}

struct RetrievalConfig {
  size_t per_route_k = 32;
  double rrf_k = 60.0;
  double bm25_k1 = 1.2;
  double bm25_b = 0.75;
  size_t dense_dim = 1024;
};

struct RouteHit {
  RouteId route = RouteId::SparseClaim;
  std::string view_id; // empty for dense and for merged atom-level hits
  AtomId atom_id;      // owner atom
  size_t rank = 0;     // 1-based, consecutive within a route
  double raw_score = 0.0;
};

struct FusedHit {
  AtomId atom_id;
  double s_ret = 0.0;
  std::map<RouteId, size_t> contributing_routes; // route -> rank
};

// Sparse-only query variants: original, lowercased, function-word
// stripped, and the original with date expressions rendered the way
// time_key views render them. Deduplicated, original first.
inline std::vector<std::string> rewrite_query(std::string_view query,
                                              const FunctionWordTable& table) {
  std::vector<std::string> variants;
  auto push = [&variants](std::string v) {
    for (const std::string& seen : variants)
      if (seen == v) return;
    variants.push_back(std::move(v));
  };
  push(std::string(query));
  push(to_lower_ascii(query));
  std::string stripped;
  for (const std::string& w : content_words(query, table)) {
    if (!stripped.empty()) stripped += ' ';
    stripped += w;
  }
  push(std::move(stripped));
  push(normalize_temporal_query(query, std::nullopt));
  return variants;
}

class RetrievalIndexes {
public:
  struct SparseIndex {
    Bm25Index index;
    std::vector<std::string> view_ids; // doc ordinal -> view
    std::vector<AtomId> owners;        // doc ordinal -> owner atom
  };
  struct DenseEntry {
    AtomId atom_id;
    std::vector<float> vector;
  };

  const SparseIndex& sparse(RouteId route) const {
    return sparse_[sparse_slot(route)];
  }
  const std::vector<DenseEntry>& dense(RouteId route) const {
    return route == RouteId::DenseClaim ? dense_claim_ : dense_span_;
  }
  Embedder& embedder() const { return *embedder_; }

  static size_t sparse_slot(RouteId route) {
    switch (route) {
      case RouteId::SparseClaim: return 0;
      case RouteId::SparseSpan: return 1;
      case RouteId::SparseHandle: return 2;
      case RouteId::SparseTime: return 3;
      case RouteId::SparsePivot: return 4;
      default: throw Error(ErrorCode::UnknownRoute, "not a sparse route");
    }
  }

  friend RetrievalIndexes build_indexes(const MemoryStore& store,
                                        std::shared_ptr<Embedder> embedder,
                                        const RetrievalConfig& config);

private:
  std::array<SparseIndex, 5> sparse_;
  std::vector<DenseEntry> dense_claim_;
  std::vector<DenseEntry> dense_span_;
  std::shared_ptr<Embedder> embedder_;
};

namespace detail {

inline std::optional<RouteId> sparse_route_of(ViewKind kind) {
  switch (kind) {
    case ViewKind::ClaimText: return RouteId::SparseClaim;
    case ViewKind::SpanText: return RouteId::SparseSpan;
    case ViewKind::SpanContext: return RouteId::SparseSpan;
    case ViewKind::HandleAlias: return RouteId::SparseHandle;
    case ViewKind::TimeKey: return RouteId::SparseTime;
    case ViewKind::PivotKey: return RouteId::SparsePivot;
  }
  return std::nullopt;
}

inline std::vector<float> checked_embedding(Embedder& embedder, std::string_view text,
                                            size_t expected_dim) {
  std::vector<float> v = embedder.embed(text);
  if (v.size() != expected_dim)
    throw Error(ErrorCode::EmbedderDimensionMismatch,
                "embedder returned " + std::to_string(v.size()) + " dims, expected " +
                    std::to_string(expected_dim));
  return v;
}

inline double cosine(const std::vector<float>& u, const std::vector<float>& v) {
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    dot += static_cast<double>(u[i]) * v[i];
    nu += static_cast<double>(u[i]) * u[i];
    nv += static_cast<double>(v[i]) * v[i];
  }
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

} // namespace detail

inline RetrievalIndexes build_indexes(const MemoryStore& store,
                                      std::shared_ptr<Embedder> embedder,
                                      const RetrievalConfig& config) {
  if (embedder->dimension() != config.dense_dim)
    throw Error(ErrorCode::EmbedderDimensionMismatch,
                "embedder dimension " + std::to_string(embedder->dimension()) +
                    " does not match configured " + std::to_string(config.dense_dim));
  RetrievalIndexes out;
  out.embedder_ = std::move(embedder);

  for (const RetrievalView& view : store.views()) {
    auto route = detail::sparse_route_of(view.view_kind);
    if (!route) continue;
    RetrievalIndexes::SparseIndex& idx = out.sparse_[RetrievalIndexes::sparse_slot(*route)];
    idx.index.add_document(tokenize(view.key_text));
    idx.view_ids.push_back(view.view_id);
    idx.owners.push_back(view.owner_atom_id);
  }

  for (AtomId id : store.kind_ids(AtomKind::Claim))
    out.dense_claim_.push_back(
        {id, detail::checked_embedding(*out.embedder_, store.get<ClaimAtom>(id).claim_text,
                                       config.dense_dim)});
  for (AtomId id : store.kind_ids(AtomKind::Span))
    out.dense_span_.push_back(
        {id, detail::checked_embedding(*out.embedder_, store.get<SpanAtom>(id).verbatim_text,
                                       config.dense_dim)});
  return out;
}

// Top-K hits for one route. Sparse routes score every rewritten
// variant and keep each view's best score; dense routes embed the
// original query and keep positive cosines only.
inline std::vector<RouteHit> route_topk(std::string_view query, RouteId route,
                                        const RetrievalIndexes& indexes,
                                        const RetrievalConfig& config) {
  struct Scored {
    double score;
    AtomId atom_id;
    std::string view_id;
  };
  std::vector<Scored> scored;

  if (is_sparse(route)) {
    const RetrievalIndexes::SparseIndex& idx = indexes.sparse(route);
    Bm25Params params{config.bm25_k1, config.bm25_b};
    std::vector<double> best(idx.view_ids.size(), 0.0);
    std::vector<bool> seen(idx.view_ids.size(), false);
    for (const std::string& variant : rewrite_query(query, builtin_function_words())) {
      for (auto [doc, s] : idx.index.score(tokenize(variant), params)) {
        if (!seen[doc] || s > best[doc]) best[doc] = s;
        seen[doc] = true;
      }
    }
    for (size_t doc = 0; doc < best.size(); ++doc)
      if (seen[doc]) scored.push_back({best[doc], idx.owners[doc], idx.view_ids[doc]});
  } else {
    std::vector<float> qv =
        detail::checked_embedding(indexes.embedder(), query, config.dense_dim);
    for (const RetrievalIndexes::DenseEntry& entry : indexes.dense(route)) {
      double sim = detail::cosine(qv, entry.vector);
      if (sim > 0.0) scored.push_back({sim, entry.atom_id, ""});
    }
  }

  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.atom_id != b.atom_id) return a.atom_id < b.atom_id;
    return a.view_id < b.view_id;
  });
  if (scored.size() > config.per_route_k) scored.resize(config.per_route_k);

  std::vector<RouteHit> hits;
  for (size_t i = 0; i < scored.size(); ++i)
    hits.push_back(RouteHit{route, scored[i].view_id, scored[i].atom_id, i + 1,
                            scored[i].score});
  return hits;
}

// Collapses view-level hits to atom-level: one hit per owner at its
// best rank, ranks re-densified to 1..n. Dense hits are already
// atom-level and pass through unchanged.
inline std::vector<RouteHit> merge_view_hits(const std::vector<RouteHit>& hits) {
  if (hits.empty()) return {};
  RouteId route = hits.front().route;
  for (const RouteHit& h : hits)
    if (h.route != route)
      throw Error(ErrorCode::MixedRoutes, "merge_view_hits fed hits from several routes");
  if (!is_sparse(route)) return hits;

  std::vector<RouteHit> merged;
  std::unordered_map<AtomId, size_t, AtomIdHash> at;
  for (const RouteHit& h : hits) { // input is rank-ordered
    auto it = at.find(h.atom_id);
    if (it != at.end()) continue; // later rank is never better
    at.emplace(h.atom_id, merged.size());
    RouteHit m = h;
    m.view_id.clear();
    merged.push_back(std::move(m));
  }
  for (size_t i = 0; i < merged.size(); ++i) merged[i].rank = i + 1;
  return merged;
}

// Eq.-style reciprocal rank fusion: s_ret(x) = sum over routes of
// 1 / (rrf_k + rank). Output sorted by s_ret descending, ties by
// ascending atom id.
inline std::vector<FusedHit> fuse_rrf(const std::map<RouteId, std::vector<RouteHit>>& per_route,
                                      const RetrievalConfig& config) {
  std::map<AtomId, FusedHit> acc;
  for (const auto& [route, hits] : per_route) {
    for (const RouteHit& h : hits) {
      FusedHit& f = acc[h.atom_id];
      f.atom_id = h.atom_id;
      f.contributing_routes[route] = h.rank;
    }
  }
  std::vector<FusedHit> fused;
  for (auto& [id, f] : acc) {
    double s = 0.0;
    for (const auto& [route, rank] : f.contributing_routes)
      s += 1.0 / (config.rrf_k + static_cast<double>(rank));
    f.s_ret = s;
    fused.push_back(std::move(f));
  }
  std::sort(fused.begin(), fused.end(), [](const FusedHit& a, const FusedHit& b) {
    if (a.s_ret != b.s_ret) return a.s_ret > b.s_ret;
    return a.atom_id < b.atom_id;
  });
  return fused;
}

struct RetrievalResult {
  std::vector<FusedHit> fused;                     // X_q
  std::map<RouteId, std::vector<RouteHit>> route_hits; // atom-level, post-merge
};

// All seven routes, one task each, then a deterministic fuse.
inline RetrievalResult retrieve(std::string_view query, const RetrievalIndexes& indexes,
                                const RetrievalConfig& config) {
  std::array<std::future<std::vector<RouteHit>>, kAllRoutes.size()> tasks;
  for (size_t i = 0; i < kAllRoutes.size(); ++i) {
    RouteId route = kAllRoutes[i];
    tasks[i] = std::async(std::launch::async, [query, route, &indexes, &config] {
      return merge_view_hits(route_topk(query, route, indexes, config));
    });
  }
  RetrievalResult result;
  for (size_t i = 0; i < kAllRoutes.size(); ++i) {
    std::vector<RouteHit> hits = tasks[i].get();
    if (!hits.empty()) result.route_hits.emplace(kAllRoutes[i], std::move(hits));
  }
  result.fused = fuse_rrf(result.route_hits, config);
  return result;
}

// Dense vector table persistence: per record, u32 id length, id bytes,
// u32 dimension, then dimension float32 values, all little-endian.
inline void write_vector_table(const std::vector<RetrievalIndexes::DenseEntry>& entries,
                               std::ostream& out) {
  auto put_u32 = [&out](uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
  };
  for (const RetrievalIndexes::DenseEntry& e : entries) {
    std::string id = e.atom_id.render();
    put_u32(static_cast<uint32_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
    put_u32(static_cast<uint32_t>(e.vector.size()));
    for (float x : e.vector) {
      uint32_t bits;
      static_assert(sizeof(bits) == sizeof(x));
      std::memcpy(&bits, &x, 4);
      put_u32(bits);
    }
  }
}

inline std::vector<RetrievalIndexes::DenseEntry> read_vector_table(std::istream& in) {
  auto get_u32 = [&in](uint32_t& v) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) return false;
    v = static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
        (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
    return true;
  };
  std::vector<RetrievalIndexes::DenseEntry> entries;
  uint32_t id_len = 0;
  while (get_u32(id_len)) {
    if (id_len > 64) throw Error(ErrorCode::CorruptRecord, "vector table id length");
    std::string id(id_len, '\0');
    if (!in.read(id.data(), id_len))
      throw Error(ErrorCode::CorruptRecord, "vector table truncated id");
    uint32_t dim = 0;
    if (!get_u32(dim)) throw Error(ErrorCode::CorruptRecord, "vector table missing dim");
    RetrievalIndexes::DenseEntry e;
    e.atom_id = AtomId::parse(id);
    e.vector.resize(dim);
    for (uint32_t i = 0; i < dim; ++i) {
      uint32_t bits = 0;
      if (!get_u32(bits)) throw Error(ErrorCode::CorruptRecord, "vector table truncated");
      float x;
      std::memcpy(&x, &bits, 4);
      e.vector[i] = x;
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

} // namespace memir
