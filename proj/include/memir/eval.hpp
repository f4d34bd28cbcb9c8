#pragma once

#include <algorithm>
#include <cstdio>
#include <future>
#include <istream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memir/pipeline.hpp"

namespace memir {

struct EvalQuery {
  std::string id;
  std::string question;
  std::vector<AtomId> gold_claim_ids; // empty for absent-fact probes
  std::string category;
};

inline std::vector<EvalQuery> load_eval_queries(std::istream& in) {
  std::vector<EvalQuery> queries;
  std::string raw;
  size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json rec = nlohmann::json::parse(raw, nullptr, false);
    if (rec.is_discarded() || !rec.is_object())
      throw Error(ErrorCode::ParseError,
                  "line " + std::to_string(line) + ": not a JSON object");
    EvalQuery q;
    try {
      q.id = rec.at("id").get<std::string>();
      q.question = rec.at("question").get<std::string>();
      if (rec.contains("gold_claim_ids"))
        for (const auto& id : rec.at("gold_claim_ids")) {
          auto parsed = AtomId::try_parse(id.get<std::string>());
          if (!parsed)
            throw Error(ErrorCode::ParseError,
                        "line " + std::to_string(line) + ": bad gold id");
          q.gold_claim_ids.push_back(*parsed);
        }
      if (rec.contains("category")) q.category = rec.at("category").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + e.what());
    }
    queries.push_back(std::move(q));
  }
  return queries;
}

struct QueryEvalRecord {
  std::string id;
  std::string category;
  bool has_gold = false;
  bool gold_in_bundles = false;   // every gold claim heads some pre-selection bundle
  bool gold_in_selection = false; // every gold claim appears in F_q
  size_t fact_count = 0;
  bool insufficient = false;
};

struct EvalRun {
  std::string variant;
  std::vector<QueryEvalRecord> per_query; // sorted by query id
  size_t labeled = 0;
  double recall_bundles = 0.0;
  double recall_selection = 0.0;
  double mean_facts = 0.0;
};

inline void check_gold_resolves(const MemoryStore& store,
                                const std::vector<EvalQuery>& queries) {
  for (const EvalQuery& q : queries)
    for (AtomId id : q.gold_claim_ids)
      if (!store.contains(id) || id.kind != AtomKind::Claim)
        throw Error(ErrorCode::UnresolvedGoldId,
                    "query " + q.id + " cites " + id.render());
}

// Runs every query through one engine; queries run concurrently, the
// reduce is order independent and output is sorted by query id.
inline EvalRun evaluate_variant(const MemoryStore& store,
                                const std::vector<EvalQuery>& queries,
                                const ProviderSet& providers,
                                const PipelineProfile& profile, std::string variant) {
  check_gold_resolves(store, queries);
  EvalRun run;
  run.variant = std::move(variant);
  if (queries.empty()) return run;

  QueryEngine engine(store, providers, profile);
  std::vector<std::future<QueryEvalRecord>> futures;
  futures.reserve(queries.size());
  for (const EvalQuery& q : queries) {
    futures.push_back(std::async(std::launch::async, [&engine, &q]() {
      QueryResponse r = engine.run(q.question);
      QueryEvalRecord rec;
      rec.id = q.id;
      rec.category = q.category;
      rec.has_gold = !q.gold_claim_ids.empty();
      rec.fact_count = r.facts.records.size();
      rec.insufficient = r.answer.insufficient;
      if (rec.has_gold) {
        rec.gold_in_bundles = true;
        rec.gold_in_selection = true;
        for (AtomId gold : q.gold_claim_ids) {
          bool in_bundles = false;
          for (const CandidateBundle& b : r.projection.bundles)
            in_bundles = in_bundles || b.claim_id == gold;
          bool in_selection = false;
          for (const FactRecord& f : r.facts.records)
            in_selection = in_selection || f.claim_id == gold;
          rec.gold_in_bundles = rec.gold_in_bundles && in_bundles;
          rec.gold_in_selection = rec.gold_in_selection && in_selection;
        }
      }
      return rec;
    }));
  }
  for (auto& f : futures) run.per_query.push_back(f.get());
  std::sort(run.per_query.begin(), run.per_query.end(),
            [](const QueryEvalRecord& a, const QueryEvalRecord& b) { return a.id < b.id; });

  size_t bundle_hits = 0, selection_hits = 0, facts = 0;
  for (const QueryEvalRecord& rec : run.per_query) {
    facts += rec.fact_count;
    if (!rec.has_gold) continue;
    ++run.labeled;
    bundle_hits += rec.gold_in_bundles ? 1 : 0;
    selection_hits += rec.gold_in_selection ? 1 : 0;
  }
  if (run.labeled) {
    run.recall_bundles = static_cast<double>(bundle_hits) / run.labeled;
    run.recall_selection = static_cast<double>(selection_hits) / run.labeled;
  }
  run.mean_facts = static_cast<double>(facts) / run.per_query.size();
  return run;
}

inline const std::vector<std::string>& eval_variant_names() {
  static const std::vector<std::string> names = {"full", "no_cues", "no_claims",
                                                 "no_projection", "no_bundles"};
  return names;
}

// Full pipeline plus the four single-flag ablations, in fixed order.
inline std::vector<EvalRun> run_eval_suite(const MemoryStore& store,
                                           const std::vector<EvalQuery>& queries,
                                           const ProviderSet& providers,
                                           PipelineProfile profile) {
  check_gold_resolves(store, queries);
  std::vector<EvalRun> runs;
  for (const std::string& name : eval_variant_names()) {
    profile.ablation = AblationFlags{};
    profile.ablation.no_cues = name == "no_cues";
    profile.ablation.no_claims = name == "no_claims";
    profile.ablation.no_projection = name == "no_projection";
    profile.ablation.no_bundles = name == "no_bundles";
    runs.push_back(evaluate_variant(store, queries, providers, profile, name));
  }
  return runs;
}

inline std::string render_eval_table(const std::vector<EvalRun>& runs) {
  std::string out =
      "variant        recall@bundles  recall@selection  mean_facts  labeled  queries\n";
  for (const EvalRun& run : runs) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%-13s  %14.2f  %16.2f  %10.2f  %7zu  %7zu\n",
                  run.variant.c_str(), run.recall_bundles, run.recall_selection,
                  run.mean_facts, run.labeled, run.per_query.size());
    out += buf;
  }
  return out;
}

inline std::string eval_records_jsonl(const std::vector<EvalRun>& runs) {
  std::string out;
  for (const EvalRun& run : runs) {
    for (const QueryEvalRecord& rec : run.per_query) {
      nlohmann::json line{{"type", "query"},
                          {"variant", run.variant},
                          {"id", rec.id},
                          {"category", rec.category},
                          {"has_gold", rec.has_gold},
                          {"gold_in_bundles", rec.gold_in_bundles},
                          {"gold_in_selection", rec.gold_in_selection},
                          {"fact_count", rec.fact_count},
                          {"insufficient", rec.insufficient}};
      out += line.dump() + "\n";
    }
    nlohmann::json summary{{"type", "variant"},
                           {"variant", run.variant},
                           {"labeled", run.labeled},
                           {"queries", run.per_query.size()},
                           {"recall_bundles", run.recall_bundles},
                           {"recall_selection", run.recall_selection},
                           {"mean_facts", run.mean_facts}};
    out += summary.dump() + "\n";
  }
  return out;
}

} // namespace memir
