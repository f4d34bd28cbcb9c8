// Prompt assets and the reference provider set.

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "memir/compile.hpp"
#include "memir/prompts.hpp"
#include "memir/reference_providers.hpp"
#include "support/random_store.hpp"

namespace memir {
namespace {

const std::string kAssets = std::string(MEMIR_SOURCE_DIR) + "/assets";

TEST(Prompts, LibraryLoadsAndMentionsVariables) {
  PromptLibrary lib = PromptLibrary::load(kAssets + "/prompts");
  EXPECT_TRUE(lib.handle_extraction.mentions("handle_usual_max"));
  EXPECT_TRUE(lib.handle_extraction.mentions("handle_max"));
  EXPECT_TRUE(lib.handle_extraction.mentions("handle_max_word"));
  EXPECT_TRUE(lib.pivot_extraction.mentions("pivot_usual_max"));
  EXPECT_TRUE(lib.claim_writing.mentions("page.max_claim_units"));
  EXPECT_TRUE(lib.bundle_selection.mentions("Bundle_max"));
}

TEST(Prompts, RenderSubstitutesEveryPlaceholder) {
  PromptLibrary lib = PromptLibrary::load(kAssets + "/prompts");
  std::string text = render_prompt(lib.handle_extraction, {{"handle_usual_max", "4"},
                                                           {"handle_max", "8"},
                                                           {"handle_max_word", "eight"}});
  EXPECT_EQ(text.find("{{"), std::string::npos);
  EXPECT_NE(text.find("eight"), std::string::npos);
}

TEST(Prompts, RenderRejectsMissingValue) {
  PromptLibrary lib = PromptLibrary::load(kAssets + "/prompts");
  try {
    render_prompt(lib.handle_extraction, {{"handle_usual_max", "4"}});
    FAIL() << "unbound placeholder accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
  }
}

TEST(Prompts, RenderRejectsUnknownValue) {
  PromptLibrary lib = PromptLibrary::load(kAssets + "/prompts");
  try {
    render_prompt(lib.bundle_selection, {{"Bundle_max", "6"}, {"stray", "x"}});
    FAIL() << "value without placeholder accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
  }
}

TEST(Prompts, BacktickOnlyVariableRendersAsIdentity) {
  PromptLibrary lib = PromptLibrary::load(kAssets + "/prompts");
  std::string text = render_prompt(lib.claim_writing, {{"page.max_claim_units", "12"}});
  EXPECT_EQ(text, lib.claim_writing.template_text);
}

TEST(WordLists, AssetsMatchBuiltins) {
  WordTable function_words = WordTable::load(kAssets + "/function_words.txt");
  EXPECT_EQ(function_words.words(), builtin_function_words().words());
  WordTable event_verbs = WordTable::load(kAssets + "/event_verbs.txt");
  EXPECT_EQ(event_verbs.words(), builtin_event_verbs().words());
}

// One stored page plus its stored spans, built the same way the
// compiler does it.
struct CompiledPage {
  MemoryStore store;
  AtomId page_id;
  PageAtom page;
  std::vector<SpanAtom> spans;
};

CompiledPage make_page(const std::vector<std::pair<std::string, std::string>>& turns,
                       std::optional<CivilDateTime> when = std::nullopt) {
  InteractionHistory history;
  history.conversation_id = "fixture";
  for (const auto& [speaker, text] : turns)
    history.turns.push_back(Turn{"s1", speaker, text, when, std::nullopt});
  CompiledPage out;
  std::vector<PageAtom> pages = paginate(history, CompileConfig{});
  out.page_id = out.store.add_atom(std::move(pages.front()));
  out.page = out.store.get<PageAtom>(out.page_id);
  for (SpanAtom& span : segment_spans(out.page)) {
    AtomId sid = out.store.add_atom(std::move(span));
    out.spans.push_back(out.store.get<SpanAtom>(sid));
  }
  return out;
}

CivilDateTime noon(int y, unsigned m, unsigned d) {
  return CivilDateTime{*CivilDate::make(y, m, d), true, 12, 0};
}

TEST(CueExtractor, FindsHandleAndRelativeTime) {
  CompiledPage fx = make_page({{"Ana", "We met last Friday at Cafe Roma."}});
  ReferenceCueExtractor extractor;
  PageCues cues = extractor.extract(fx.page, fx.spans);
  ASSERT_EQ(cues.handles.size(), 1u);
  EXPECT_EQ(cues.handles[0].surface_text, "Cafe Roma");
  ASSERT_EQ(cues.times.size(), 1u);
  EXPECT_EQ(cues.times[0].surface_text, "last Friday");
  EXPECT_FALSE(cues.times[0].normalized.has_value());
  ASSERT_TRUE(cues.times[0].relative_expression.has_value());
  EXPECT_EQ(*cues.times[0].relative_expression, "last Friday");
}

TEST(CueExtractor, ResolvesRelativeTimeAgainstPageTimestamp) {
  // 2023-05-08 is a Monday; the Friday before it is 2023-05-05.
  CompiledPage fx = make_page({{"Ana", "We met last Friday at Cafe Roma."}}, noon(2023, 5, 8));
  ReferenceCueExtractor extractor;
  PageCues cues = extractor.extract(fx.page, fx.spans);
  ASSERT_EQ(cues.times.size(), 1u);
  ASSERT_TRUE(cues.times[0].normalized.has_value());
  EXPECT_EQ(cues.times[0].normalized->render(), "2023-05-05");
}

TEST(CueExtractor, FindsAbsoluteDate) {
  CompiledPage fx = make_page({{"Rui", "We visited Machu Picchu on 12 May 2023."}});
  ReferenceCueExtractor extractor;
  PageCues cues = extractor.extract(fx.page, fx.spans);
  ASSERT_EQ(cues.handles.size(), 1u);
  EXPECT_EQ(cues.handles[0].surface_text, "Machu Picchu");
  ASSERT_EQ(cues.times.size(), 1u);
  EXPECT_EQ(cues.times[0].surface_text, "12 May 2023");
  ASSERT_TRUE(cues.times[0].normalized.has_value());
  EXPECT_EQ(cues.times[0].normalized->render(), "2023-05-12");
  EXPECT_FALSE(cues.times[0].relative_expression.has_value());
}

TEST(CueExtractor, FindsPivotAfterEventVerb) {
  CompiledPage fx = make_page({{"Ana", "Joanna finished her first screenplay last month."}});
  ReferenceCueExtractor extractor;
  PageCues cues = extractor.extract(fx.page, fx.spans);
  ASSERT_EQ(cues.pivots.size(), 1u);
  EXPECT_EQ(cues.pivots[0].referent_label, "first screenplay");
  EXPECT_EQ(cues.pivots[0].support_text, "finished her first screenplay");
  ASSERT_EQ(cues.times.size(), 1u);
  EXPECT_EQ(cues.times[0].surface_text, "last month");
}

TEST(CueExtractor, SmallTalkYieldsNothing) {
  CompiledPage fx = make_page({{"Ana", "haha nice"}});
  ReferenceCueExtractor extractor;
  PageCues cues = extractor.extract(fx.page, fx.spans);
  EXPECT_TRUE(cues.empty());
}

TEST(CueExtractor, SentenceInitialOnlyNameIsSkipped) {
  // "Joanna" opens both sentences and never recurs mid-sentence, so no
  // handle is proposed for it.
  CompiledPage fx = make_page(
      {{"Ana", "Joanna called me. Joanna sounded happy."}});
  ReferenceCueExtractor extractor;
  PageCues cues = extractor.extract(fx.page, fx.spans);
  EXPECT_TRUE(cues.handles.empty());
}

TEST(CueExtractor, MidSentenceUseLicensesHandle) {
  CompiledPage fx = make_page({{"Ana", "Joanna called me. I told Joanna about the trip."}});
  ReferenceCueExtractor extractor;
  PageCues cues = extractor.extract(fx.page, fx.spans);
  ASSERT_EQ(cues.handles.size(), 1u);
  EXPECT_EQ(cues.handles[0].surface_text, "Joanna");
  EXPECT_EQ(cues.handles[0].support_span_ids.size(), 2u);
}

TEST(CueExtractor, OutputsPassStoreAdmission) {
  CompiledPage fx = make_page({{"Ana", "We met last Friday at Cafe Roma."},
                               {"Rui", "Joanna finished her first screenplay last month. "
                                       "I told Joanna she should celebrate."}},
                              noon(2023, 5, 8));
  ReferenceCueExtractor extractor;
  PageCues cues = extractor.extract(fx.page, fx.spans);
  EXPECT_FALSE(cues.empty());
  for (HandleAtom& h : cues.handles) EXPECT_TRUE(fx.store.add_atom(std::move(h)).valid());
  for (TimeAtom& t : cues.times) EXPECT_TRUE(fx.store.add_atom(std::move(t)).valid());
  for (PivotAtom& v : cues.pivots) EXPECT_TRUE(fx.store.add_atom(std::move(v)).valid());
}

TEST(ClaimWriter, ResolvesSentenceInitialPronouns) {
  CompiledPage fx = make_page({{"Joanna", "I finished the script. I'm thrilled about it. "
                                          "We met last Friday."}});
  ReferenceClaimWriter writer;
  std::vector<ClaimAtom> claims = writer.write(fx.page, fx.spans, {}, 12);
  ASSERT_EQ(claims.size(), 3u);
  EXPECT_EQ(claims[0].claim_text, "Joanna finished the script.");
  EXPECT_EQ(claims[1].claim_text, "Joanna is thrilled about it.");
  EXPECT_EQ(claims[2].claim_text, "Joanna and others met last Friday.");
  for (const ClaimAtom& c : claims) ASSERT_EQ(c.support_span_ids.size(), 1u);
}

TEST(ClaimWriter, NonPronounSentenceIsAttributed) {
  CompiledPage fx = make_page({{"Rui", "The retriever is called Biscuit."}});
  ReferenceClaimWriter writer;
  std::vector<ClaimAtom> claims = writer.write(fx.page, fx.spans, {}, 12);
  ASSERT_EQ(claims.size(), 1u);
  EXPECT_EQ(claims[0].claim_text, "Rui stated: The retriever is called Biscuit.");
}

TEST(ClaimWriter, SkipsThinSentences) {
  CompiledPage fx = make_page({{"Ana", "haha nice"}, {"Rui", "ok"}});
  ReferenceClaimWriter writer;
  EXPECT_TRUE(writer.write(fx.page, fx.spans, {}, 12).empty());
}

TEST(ClaimWriter, RespectsBudgetAndPrefersPivotSpans) {
  CompiledPage fx = make_page(
      {{"Ana", "The weather was lovely yesterday afternoon. "
               "Joanna finished her first screenplay last month."}});
  ReferenceCueExtractor extractor;
  PageCues proposals = extractor.extract(fx.page, fx.spans);
  // Store the cues so they carry ids, as the compiler would.
  PageCues cues;
  for (HandleAtom& h : proposals.handles) {
    AtomId id = fx.store.add_atom(std::move(h));
    cues.handles.push_back(fx.store.get<HandleAtom>(id));
  }
  for (TimeAtom& t : proposals.times) {
    AtomId id = fx.store.add_atom(std::move(t));
    cues.times.push_back(fx.store.get<TimeAtom>(id));
  }
  for (PivotAtom& v : proposals.pivots) {
    AtomId id = fx.store.add_atom(std::move(v));
    cues.pivots.push_back(fx.store.get<PivotAtom>(id));
  }
  ReferenceClaimWriter writer;
  std::vector<ClaimAtom> claims = writer.write(fx.page, fx.spans, cues, 1);
  ASSERT_EQ(claims.size(), 1u);
  // The pivot-bearing sentence wins the single slot.
  EXPECT_NE(claims[0].claim_text.find("screenplay"), std::string::npos);
  EXPECT_FALSE(claims[0].linked_cue_ids.empty());
}

TEST(ClaimWriter, LinksCuesSupportedByClaimSpan) {
  CompiledPage fx = make_page({{"Ana", "We visited Machu Picchu on 12 May 2023."}});
  ReferenceCueExtractor extractor;
  PageCues proposals = extractor.extract(fx.page, fx.spans);
  PageCues cues;
  for (HandleAtom& h : proposals.handles) {
    AtomId id = fx.store.add_atom(std::move(h));
    cues.handles.push_back(fx.store.get<HandleAtom>(id));
  }
  for (TimeAtom& t : proposals.times) {
    AtomId id = fx.store.add_atom(std::move(t));
    cues.times.push_back(fx.store.get<TimeAtom>(id));
  }
  ReferenceClaimWriter writer;
  std::vector<ClaimAtom> claims = writer.write(fx.page, fx.spans, cues, 12);
  ASSERT_EQ(claims.size(), 1u);
  ASSERT_EQ(claims[0].linked_cue_ids.size(), 2u);
  EXPECT_EQ(claims[0].linked_cue_ids[0].kind, AtomKind::Handle);
  EXPECT_EQ(claims[0].linked_cue_ids[1].kind, AtomKind::Time);
}

TEST(Embedder, DeterministicUnitVectors) {
  ReferenceEmbedder a(256), b(256);
  std::vector<float> u = a.embed("the quick brown fox");
  std::vector<float> v = b.embed("the quick brown fox");
  ASSERT_EQ(u.size(), 256u);
  EXPECT_EQ(u, v);
  double norm = 0;
  for (float x : u) norm += static_cast<double>(x) * x;
  EXPECT_NEAR(norm, 1.0, 1e-6);
  EXPECT_NE(u, a.embed("a completely different sentence"));
}

TEST(Embedder, EmptyTextEmbedsToZero) {
  ReferenceEmbedder e(64);
  for (float x : e.embed("")) EXPECT_EQ(x, 0.0f);
}

TEST(Scorer, CountsDistinctContentWordOverlap) {
  ReferenceBundleScorer scorer;
  // Content words of the query: joanna, finish, screenplay.
  double s = scorer.score("did Joanna finish the screenplay",
                          "Joanna finished her first screenplay last month");
  EXPECT_NEAR(s, 2.0 / 3.0, 1e-12);
  EXPECT_EQ(scorer.score("did Joanna finish the screenplay", "nothing relevant here"), 0.0);
}

TEST(Selector, OrdersByScoreAndAssignsRoles) {
  ReferenceBundleSelector selector;
  std::vector<std::pair<AtomId, std::string>> bundles = {
      {AtomId::parse("C0:00"), "nothing relevant"},
      {AtomId::parse("C0:01"), "Joanna finished her screenplay in May"},
      {AtomId::parse("C0:02"), "a screenplay was mentioned"},
  };
  auto picks = selector.select("joanna finished the screenplay", bundles, 2);
  ASSERT_EQ(picks.size(), 2u);
  EXPECT_EQ(picks[0].bundle_id.render(), "C0:01");
  EXPECT_EQ(picks[0].role, FactRole::Direct);
  EXPECT_EQ(picks[1].bundle_id.render(), "C0:02");
  EXPECT_EQ(picks[1].role, FactRole::Support);
}

TEST(Selector, KeepsZeroScoredBundlesAsSupport) {
  ReferenceBundleSelector selector;
  std::vector<std::pair<AtomId, std::string>> bundles = {
      {AtomId::parse("C0:00"), "nothing relevant"},
  };
  auto picks = selector.select("joanna finished the screenplay", bundles, 3);
  ASSERT_EQ(picks.size(), 1u);
  EXPECT_EQ(picks[0].role, FactRole::Support);
}

TEST(Composer, AnswersFromFirstDirectFact) {
  ReferenceAnswerComposer composer;
  std::string rendered =
      "QUERY: what did Joanna finish\n"
      "FACT[1] (support) Rui stated: The trip was long.\n"
      "FACT[2] (direct) Joanna finished her first screenplay.\n"
      "TIME: last month [2023-04-01..2023-04-30]; 12 May 2023 [2023-05-12]\n"
      "EVIDENCE: {P0:2} \"Joanna finished her first screenplay last month.\"\n";
  AnswerOutcome out = composer.compose("what did Joanna finish", rendered);
  ASSERT_FALSE(out.insufficient);
  EXPECT_EQ(out.answer, "Joanna finished her first screenplay.");
}

TEST(Composer, AppendsTimeForWhenQuestions) {
  ReferenceAnswerComposer composer;
  std::string rendered =
      "QUERY: when did Joanna finish the screenplay\n"
      "FACT[1] (direct) Joanna finished her first screenplay.\n"
      "TIME: last month [2023-04-01..2023-04-30]; 12 May 2023 [2023-05-12]\n";
  AnswerOutcome out = composer.compose("when did Joanna finish the screenplay", rendered);
  ASSERT_FALSE(out.insufficient);
  EXPECT_EQ(out.answer,
            "Joanna finished her first screenplay. (last month [2023-04-01..2023-04-30])");
}

TEST(Composer, NoDirectFactMeansInsufficient) {
  ReferenceAnswerComposer composer;
  std::string rendered =
      "QUERY: what color is the motorcycle\n"
      "FACT[1] (support) Rui stated: The trip was long.\n";
  AnswerOutcome out = composer.compose("what color is the motorcycle", rendered);
  EXPECT_TRUE(out.insufficient);
  EXPECT_TRUE(out.answer.empty());
}

// Reference providers may only cite spans they were handed; every
// proposal must clear the admission gate.
TEST(ReferenceProviders, ProposalsAlwaysAdmissible) {
  std::mt19937_64 rng(20240517);
  const char* sentences[] = {
      "We met last Friday at Cafe Roma.",
      "Joanna finished her first screenplay last month.",
      "I told Joanna about the plan. Joanna agreed.",
      "The meeting moved to 3 PM.",
      "We visited Machu Picchu on 12 May 2023.",
      "haha nice",
      "My retriever is called Biscuit. Biscuit loves the park.",
      "I'm moving to Lisbon in 2024.",
  };
  for (int round = 0; round < 40; ++round) {
    std::vector<std::pair<std::string, std::string>> turns;
    size_t n = 1 + rng() % 4;
    for (size_t i = 0; i < n; ++i)
      turns.emplace_back(i % 2 ? "Rui" : "Ana", sentences[rng() % std::size(sentences)]);
    std::optional<CivilDateTime> when;
    if (rng() % 2) when = noon(2023, 1 + rng() % 12, 1 + rng() % 28);
    CompiledPage fx = make_page(turns, when);

    ReferenceCueExtractor extractor;
    PageCues proposals = extractor.extract(fx.page, fx.spans);
    PageCues cues;
    for (HandleAtom& h : proposals.handles) {
      AtomId id = fx.store.add_atom(std::move(h));
      cues.handles.push_back(fx.store.get<HandleAtom>(id));
    }
    for (TimeAtom& t : proposals.times) {
      AtomId id = fx.store.add_atom(std::move(t));
      cues.times.push_back(fx.store.get<TimeAtom>(id));
    }
    for (PivotAtom& v : proposals.pivots) {
      AtomId id = fx.store.add_atom(std::move(v));
      cues.pivots.push_back(fx.store.get<PivotAtom>(id));
    }
    ReferenceClaimWriter writer;
    for (ClaimAtom& c : writer.write(fx.page, fx.spans, cues, 12))
      EXPECT_TRUE(fx.store.add_atom(std::move(c)).valid());
  }
}

} // namespace
} // namespace memir
