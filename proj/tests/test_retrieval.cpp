// Query rewriting, BM25 routes, view merging, and RRF fusion.

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "memir/compile.hpp"
#include "memir/reference_providers.hpp"
#include "memir/retrieval.hpp"
#include "support/oracles.hpp"

namespace memir {
namespace {

InteractionHistory fixture_history() {
  InteractionHistory history;
  history.conversation_id = "retrieval-fx";
  history.turns = {
      Turn{"s1", "Ana", "We met last Friday at Cafe Roma.", std::nullopt, std::nullopt},
      Turn{"s1", "Rui", "I enjoyed the espresso there.", std::nullopt, std::nullopt},
      Turn{"s2", "Ana", "Joanna finished her first screenplay last month.", std::nullopt,
           std::nullopt},
      Turn{"s2", "Rui", "We visited Machu Picchu on 12 May 2023. I told Joanna about it.",
           std::nullopt, std::nullopt},
  };
  history.turns[0].timestamp = CivilDateTime{*CivilDate::make(2023, 5, 8), true, 13, 56};
  history.turns[2].timestamp = CivilDateTime{*CivilDate::make(2023, 6, 12), true, 10, 15};
  return history;
}

MemoryStore fixture_store() {
  return compile(fixture_history(), reference_providers(), CompileConfig{}).store;
}

TEST(RewriteQuery, OriginalFirstDedupedVariants) {
  std::vector<std::string> variants =
      rewrite_query("What did Joanna finish?", builtin_function_words());
  ASSERT_FALSE(variants.empty());
  EXPECT_EQ(variants[0], "What did Joanna finish?");
  for (size_t i = 0; i < variants.size(); ++i)
    for (size_t j = i + 1; j < variants.size(); ++j) EXPECT_NE(variants[i], variants[j]);
  bool lowered = false;
  for (const std::string& v : variants) lowered = lowered || v == "what did joanna finish?";
  EXPECT_TRUE(lowered);
  EXPECT_LE(variants.size(), 4u);
}

TEST(RewriteQuery, AlreadyNormalizedQueryCollapses) {
  std::vector<std::string> variants = rewrite_query("joanna screenplay",
                                                    builtin_function_words());
  EXPECT_EQ(variants.size(), 1u);
  EXPECT_EQ(variants[0], "joanna screenplay");
}

TEST(RewriteQuery, TemporalVariantRendersDates) {
  std::vector<std::string> variants =
      rewrite_query("what happened on 12 May 2023", builtin_function_words());
  bool rendered = false;
  for (const std::string& v : variants)
    rendered = rendered || v.find("12 May 2023 [2023-05-12]") != std::string::npos;
  EXPECT_TRUE(rendered);
}

TEST(RewriteQuery, EmptyQueryYieldsSingletonEmpty) {
  std::vector<std::string> variants = rewrite_query("", builtin_function_words());
  ASSERT_EQ(variants.size(), 1u);
  EXPECT_EQ(variants[0], "");
}

TEST(Routes, NamesRoundTrip) {
  for (RouteId route : kAllRoutes) EXPECT_EQ(route_from_string(to_string(route)), route);
  try {
    route_from_string("bogus");
    FAIL() << "unknown route accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownRoute);
  }
}

TEST(Bm25, MatchesOracleOnRandomCorpora) {
  std::mt19937_64 rng(7331);
  const char* pool[] = {"river", "stone", "lamp",  "quiet", "march", "violet",
                        "seven", "cloud", "amber", "flint", "harbor", "plume"};
  for (int round = 0; round < 60; ++round) {
    size_t n_docs = 1 + rng() % 50;
    std::vector<std::vector<std::string>> docs;
    Bm25Index index;
    for (size_t d = 0; d < n_docs; ++d) {
      std::vector<std::string> doc;
      size_t len = rng() % 12;
      for (size_t i = 0; i < len; ++i) doc.push_back(pool[rng() % std::size(pool)]);
      index.add_document(doc);
      docs.push_back(std::move(doc));
    }
    std::vector<std::string> query;
    size_t qlen = 1 + rng() % 5;
    for (size_t i = 0; i < qlen; ++i) query.push_back(pool[rng() % std::size(pool)]);

    Bm25Params params;
    std::vector<double> expected = testing::oracle_bm25(docs, query, params.k1, params.b);
    std::vector<double> got(n_docs, 0.0);
    for (auto [doc, score] : index.score(query, params)) got[doc] = score;
    for (size_t d = 0; d < n_docs; ++d) EXPECT_NEAR(got[d], expected[d], 1e-9);
  }
}

TEST(Bm25, OnlySharedTermDocsAreScored) {
  Bm25Index index;
  index.add_document({"alpha", "beta"});
  index.add_document({"gamma"});
  auto scored = index.score({"alpha"}, Bm25Params{});
  ASSERT_EQ(scored.size(), 1u);
  EXPECT_EQ(scored[0].first, 0u);
  EXPECT_GT(scored[0].second, 0.0);
}

TEST(BuildIndexes, OneDocPerViewOneVectorPerAtom) {
  MemoryStore store = fixture_store();
  RetrievalIndexes indexes =
      build_indexes(store, std::make_shared<ReferenceEmbedder>(1024), RetrievalConfig{});
  size_t claim_views = 0, span_views = 0, handle_views = 0, time_views = 0, pivot_views = 0;
  for (const RetrievalView& v : store.views()) {
    switch (v.view_kind) {
      case ViewKind::ClaimText: ++claim_views; break;
      case ViewKind::SpanText:
      case ViewKind::SpanContext: ++span_views; break;
      case ViewKind::HandleAlias: ++handle_views; break;
      case ViewKind::TimeKey: ++time_views; break;
      case ViewKind::PivotKey: ++pivot_views; break;
    }
  }
  EXPECT_EQ(indexes.sparse(RouteId::SparseClaim).index.size(), claim_views);
  EXPECT_EQ(indexes.sparse(RouteId::SparseSpan).index.size(), span_views);
  EXPECT_EQ(indexes.sparse(RouteId::SparseHandle).index.size(), handle_views);
  EXPECT_EQ(indexes.sparse(RouteId::SparseTime).index.size(), time_views);
  EXPECT_EQ(indexes.sparse(RouteId::SparsePivot).index.size(), pivot_views);
  EXPECT_EQ(indexes.dense(RouteId::DenseClaim).size(),
            store.kind_ids(AtomKind::Claim).size());
  EXPECT_EQ(indexes.dense(RouteId::DenseSpan).size(), store.kind_ids(AtomKind::Span).size());
}

TEST(BuildIndexes, DimensionMismatchIsRejected) {
  MemoryStore store = fixture_store();
  try {
    build_indexes(store, std::make_shared<ReferenceEmbedder>(256), RetrievalConfig{});
    FAIL() << "dimension mismatch accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmbedderDimensionMismatch);
  }
}

class WrongSizeEmbedder : public Embedder {
public:
  size_t dimension() const override { return 1024; }
  std::vector<float> embed(std::string_view) override { return std::vector<float>(7, 0.5f); }
};

TEST(BuildIndexes, LyingEmbedderIsCaught) {
  MemoryStore store = fixture_store();
  try {
    build_indexes(store, std::make_shared<WrongSizeEmbedder>(), RetrievalConfig{});
    FAIL() << "wrong-size vectors accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmbedderDimensionMismatch);
  }
}

TEST(RouteTopk, ExactClaimTextRanksFirstOnSparseClaim) {
  MemoryStore store = fixture_store();
  RetrievalIndexes indexes =
      build_indexes(store, std::make_shared<ReferenceEmbedder>(1024), RetrievalConfig{});
  std::vector<AtomId> claims = store.kind_ids(AtomKind::Claim);
  ASSERT_FALSE(claims.empty());
  const ClaimAtom& claim = store.get<ClaimAtom>(claims.front());
  std::vector<RouteHit> hits =
      route_topk(claim.claim_text, RouteId::SparseClaim, indexes, RetrievalConfig{});
  ASSERT_FALSE(hits.empty());
  EXPECT_EQ(hits[0].atom_id, claim.id);
  EXPECT_EQ(hits[0].rank, 1u);
  for (size_t i = 0; i < hits.size(); ++i) EXPECT_EQ(hits[i].rank, i + 1);
}

TEST(RouteTopk, ExactClaimTextRanksFirstOnDenseClaim) {
  MemoryStore store = fixture_store();
  RetrievalIndexes indexes =
      build_indexes(store, std::make_shared<ReferenceEmbedder>(1024), RetrievalConfig{});
  std::vector<AtomId> claims = store.kind_ids(AtomKind::Claim);
  const ClaimAtom& claim = store.get<ClaimAtom>(claims.back());
  std::vector<RouteHit> hits =
      route_topk(claim.claim_text, RouteId::DenseClaim, indexes, RetrievalConfig{});
  ASSERT_FALSE(hits.empty());
  EXPECT_EQ(hits[0].atom_id, claim.id);
  EXPECT_NEAR(hits[0].raw_score, 1.0, 1e-6);
}

TEST(RouteTopk, NoSharedVocabularyMeansNoHits) {
  MemoryStore store = fixture_store();
  RetrievalIndexes indexes =
      build_indexes(store, std::make_shared<ReferenceEmbedder>(1024), RetrievalConfig{});
  for (RouteId route : kSparseRoutes)
    EXPECT_TRUE(route_topk("zzyzx qwop", route, indexes, RetrievalConfig{}).empty());
  EXPECT_TRUE(route_topk("", RouteId::DenseClaim, indexes, RetrievalConfig{}).empty());
  EXPECT_TRUE(route_topk("", RouteId::DenseSpan, indexes, RetrievalConfig{}).empty());
}

TEST(RouteTopk, PerRouteKCapsHits) {
  MemoryStore store = fixture_store();
  RetrievalConfig config;
  config.per_route_k = 2;
  RetrievalIndexes indexes =
      build_indexes(store, std::make_shared<ReferenceEmbedder>(1024), config);
  std::vector<RouteHit> hits = route_topk("Joanna", RouteId::SparseSpan, indexes, config);
  EXPECT_LE(hits.size(), 2u);
}

TEST(RouteTopk, DenseRoutesReturnOnlyClaimsAndSpans) {
  MemoryStore store = fixture_store();
  RetrievalIndexes indexes =
      build_indexes(store, std::make_shared<ReferenceEmbedder>(1024), RetrievalConfig{});
  for (const RouteHit& h :
       route_topk("Joanna screenplay Cafe Roma", RouteId::DenseClaim, indexes,
                  RetrievalConfig{}))
    EXPECT_EQ(h.atom_id.kind, AtomKind::Claim);
  for (const RouteHit& h : route_topk("Joanna screenplay Cafe Roma", RouteId::DenseSpan,
                                      indexes, RetrievalConfig{}))
    EXPECT_EQ(h.atom_id.kind, AtomKind::Span);
}

TEST(MergeViewHits, CollapsesToBestRankAndRedensifies) {
  AtomId a = AtomId::parse("S0:00");
  AtomId b = AtomId::parse("S0:01");
  std::vector<RouteHit> hits = {
      RouteHit{RouteId::SparseSpan, "r1", a, 1, 3.0},
      RouteHit{RouteId::SparseSpan, "r9", b, 2, 2.5},
      RouteHit{RouteId::SparseSpan, "r2", a, 3, 2.0}, // same owner, worse rank
  };
  std::vector<RouteHit> merged = merge_view_hits(hits);
  ASSERT_EQ(merged.size(), 2u);
  EXPECT_EQ(merged[0].atom_id, a);
  EXPECT_EQ(merged[0].rank, 1u);
  EXPECT_TRUE(merged[0].view_id.empty());
  EXPECT_EQ(merged[1].atom_id, b);
  EXPECT_EQ(merged[1].rank, 2u);
}

TEST(MergeViewHits, MixedRoutesRejected) {
  std::vector<RouteHit> hits = {
      RouteHit{RouteId::SparseSpan, "r1", AtomId::parse("S0:00"), 1, 1.0},
      RouteHit{RouteId::SparseClaim, "r2", AtomId::parse("C0:00"), 2, 1.0},
  };
  try {
    merge_view_hits(hits);
    FAIL() << "mixed routes accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MixedRoutes);
  }
}

TEST(FuseRrf, HandEvaluatedScores) {
  RetrievalConfig config; // rrf_k = 60
  AtomId x = AtomId::parse("C0:00");
  std::map<RouteId, std::vector<RouteHit>> per_route;
  per_route[RouteId::SparseClaim] = {RouteHit{RouteId::SparseClaim, "", x, 1, 5.0}};
  std::vector<FusedHit> fused = fuse_rrf(per_route, config);
  ASSERT_EQ(fused.size(), 1u);
  EXPECT_NEAR(fused[0].s_ret, 1.0 / 61.0, 1e-15);

  per_route.clear();
  per_route[RouteId::SparseClaim] = {RouteHit{RouteId::SparseClaim, "", x, 2, 5.0}};
  per_route[RouteId::DenseClaim] = {RouteHit{RouteId::DenseClaim, "", x, 5, 0.7}};
  fused = fuse_rrf(per_route, config);
  ASSERT_EQ(fused.size(), 1u);
  EXPECT_NEAR(fused[0].s_ret, 1.0 / 62.0 + 1.0 / 65.0, 1e-15);
  EXPECT_EQ(fused[0].contributing_routes.size(), 2u);
}

TEST(FuseRrf, MatchesOracleOnRandomRankings) {
  std::mt19937_64 rng(90210);
  for (int round = 0; round < 50; ++round) {
    size_t n_routes = 1 + rng() % kAllRoutes.size();
    std::map<RouteId, std::vector<RouteHit>> per_route;
    std::vector<std::vector<AtomId>> rankings;
    for (size_t r = 0; r < n_routes; ++r) {
      RouteId route = kAllRoutes[r];
      size_t n = rng() % 12;
      std::vector<AtomId> ranking;
      std::vector<RouteHit> hits;
      std::set<AtomId> used;
      for (size_t i = 0; i < n; ++i) {
        AtomId id{AtomKind::Claim, static_cast<uint32_t>(rng() % 4),
                  static_cast<uint32_t>(rng() % 8)};
        if (!used.insert(id).second) continue;
        hits.push_back(RouteHit{route, "", id, hits.size() + 1, 1.0});
        ranking.push_back(id);
      }
      per_route[route] = std::move(hits);
      rankings.push_back(std::move(ranking));
    }
    double rrf_k = 1.0 + static_cast<double>(rng() % 100);
    RetrievalConfig config;
    config.rrf_k = rrf_k;
    std::vector<FusedHit> fused = fuse_rrf(per_route, config);
    std::map<AtomId, double> expected = testing::oracle_rrf(rankings, rrf_k);
    ASSERT_EQ(fused.size(), expected.size());
    for (const FusedHit& f : fused) EXPECT_NEAR(f.s_ret, expected.at(f.atom_id), 1e-12);
    // Sorted by score descending, ties ascending id.
    for (size_t i = 1; i < fused.size(); ++i) {
      EXPECT_TRUE(fused[i - 1].s_ret > fused[i].s_ret ||
                  (fused[i - 1].s_ret == fused[i].s_ret &&
                   fused[i - 1].atom_id < fused[i].atom_id));
    }
  }
}

TEST(FuseRrf, ContainmentAndMonotonicity) {
  RetrievalConfig config;
  AtomId x = AtomId::parse("C0:00");
  AtomId y = AtomId::parse("C0:01");
  std::map<RouteId, std::vector<RouteHit>> per_route;
  per_route[RouteId::SparseClaim] = {RouteHit{RouteId::SparseClaim, "", x, 1, 2.0},
                                     RouteHit{RouteId::SparseClaim, "", y, 2, 1.0}};
  per_route[RouteId::DenseClaim] = {RouteHit{RouteId::DenseClaim, "", y, 3, 0.5}};
  std::vector<FusedHit> before = fuse_rrf(per_route, config);
  // Containment: exactly the union of route members.
  ASSERT_EQ(before.size(), 2u);
  // Improve y's dense rank; its fused score must strictly increase.
  double y_before = 0.0;
  for (const FusedHit& f : before)
    if (f.atom_id == y) y_before = f.s_ret;
  per_route[RouteId::DenseClaim] = {RouteHit{RouteId::DenseClaim, "", y, 1, 0.9}};
  for (const FusedHit& f : fuse_rrf(per_route, config))
    if (f.atom_id == y) EXPECT_GT(f.s_ret, y_before);
}

TEST(Retrieve, FusedScoresMatchOracleOverRouteHits) {
  MemoryStore store = fixture_store();
  RetrievalConfig config;
  RetrievalIndexes indexes =
      build_indexes(store, std::make_shared<ReferenceEmbedder>(1024), config);
  RetrievalResult result = retrieve("When did Joanna finish her screenplay?", indexes, config);
  ASSERT_FALSE(result.fused.empty());
  std::vector<std::vector<AtomId>> rankings;
  for (const auto& [route, hits] : result.route_hits) {
    std::vector<AtomId> ranking;
    for (const RouteHit& h : hits) ranking.push_back(h.atom_id);
    rankings.push_back(std::move(ranking));
  }
  std::map<AtomId, double> expected = testing::oracle_rrf(rankings, config.rrf_k);
  ASSERT_EQ(result.fused.size(), expected.size());
  for (const FusedHit& f : result.fused) EXPECT_NEAR(f.s_ret, expected.at(f.atom_id), 1e-12);
}

TEST(Retrieve, DeterministicAcrossCalls) {
  MemoryStore store = fixture_store();
  RetrievalConfig config;
  RetrievalIndexes indexes =
      build_indexes(store, std::make_shared<ReferenceEmbedder>(1024), config);
  auto snapshot = [&](const RetrievalResult& r) {
    std::ostringstream out;
    for (const FusedHit& f : r.fused) {
      out << f.atom_id.render() << " " << f.s_ret;
      for (const auto& [route, rank] : f.contributing_routes)
        out << " " << to_string(route) << ":" << rank;
      out << "\n";
    }
    return out.str();
  };
  RetrievalResult a = retrieve("where did they meet last Friday", indexes, config);
  RetrievalResult b = retrieve("where did they meet last Friday", indexes, config);
  EXPECT_EQ(snapshot(a), snapshot(b));
  EXPECT_FALSE(a.fused.empty());
}

TEST(VectorTable, RoundTripsBitExactly) {
  MemoryStore store = fixture_store();
  RetrievalIndexes indexes =
      build_indexes(store, std::make_shared<ReferenceEmbedder>(1024), RetrievalConfig{});
  std::ostringstream out(std::ios::binary);
  write_vector_table(indexes.dense(RouteId::DenseClaim), out);
  std::istringstream in(out.str(), std::ios::binary);
  std::vector<RetrievalIndexes::DenseEntry> reloaded = read_vector_table(in);
  const auto& original = indexes.dense(RouteId::DenseClaim);
  ASSERT_EQ(reloaded.size(), original.size());
  for (size_t i = 0; i < original.size(); ++i) {
    EXPECT_EQ(reloaded[i].atom_id, original[i].atom_id);
    EXPECT_EQ(reloaded[i].vector, original[i].vector);
  }
}

TEST(VectorTable, TruncationIsCorruptRecord) {
  MemoryStore store = fixture_store();
  RetrievalIndexes indexes =
      build_indexes(store, std::make_shared<ReferenceEmbedder>(1024), RetrievalConfig{});
  std::ostringstream out(std::ios::binary);
  write_vector_table(indexes.dense(RouteId::DenseClaim), out);
  std::string bytes = out.str();
  std::istringstream in(bytes.substr(0, bytes.size() / 2), std::ios::binary);
  EXPECT_THROW(read_vector_table(in), Error);
}

} // namespace
} // namespace memir
