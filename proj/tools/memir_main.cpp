// Front end: ingest a corpus into a store, query a store, validate a
// trace file, run the eval suite. Exit codes: 0 success, 1 input
// error, 2 provider failure.

#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "memir.hpp"

namespace {

int exit_code_for(const memir::Error& e) {
  switch (e.code()) {
    case memir::ErrorCode::ProviderFailure:
    case memir::ErrorCode::ScorerFailure:
      return 2;
    default:
      return 1;
  }
}

memir::PipelineProfile resolve_profile(const std::string& name,
                                       const std::string& config_path,
                                       const std::string& ablate) {
  memir::PipelineProfile profile = memir::profile_from_name(name);
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in)
      throw memir::Error(memir::ErrorCode::IoError, "cannot open " + config_path);
    memir::apply_config(profile, in);
  }
  if (!ablate.empty()) profile.ablation = memir::parse_ablation_list(ablate);
  return profile;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw memir::Error(memir::ErrorCode::IoError, "cannot write " + path);
  out << content;
}

int run_ingest(const std::string& corpus_path, const std::string& out_path,
               const memir::PipelineProfile& profile, const std::string& report_path,
               const std::string& vectors_path) {
  memir::InteractionHistory history = memir::load_corpus(corpus_path);
  memir::ProviderSet providers = memir::reference_providers(profile.retrieval.dense_dim);
  memir::CompileResult result = memir::compile(history, providers, profile.compile);
  memir::persist(result.store, out_path);
  if (!report_path.empty()) write_file(report_path, result.report.to_jsonl());
  if (!vectors_path.empty()) {
    memir::RetrievalIndexes indexes =
        memir::build_indexes(result.store, providers.embedder, profile.retrieval);
    std::vector<memir::RetrievalIndexes::DenseEntry> entries =
        indexes.dense(memir::RouteId::DenseClaim);
    const auto& spans = indexes.dense(memir::RouteId::DenseSpan);
    entries.insert(entries.end(), spans.begin(), spans.end());
    std::ofstream out(vectors_path, std::ios::binary);
    if (!out)
      throw memir::Error(memir::ErrorCode::IoError, "cannot write " + vectors_path);
    memir::write_vector_table(entries, out);
  }

  const memir::MemoryStore& store = result.store;
  std::cout << "ingested " << history.turns.size() << " turns into "
            << store.pages().size() << " pages\n"
            << "atoms: " << store.size() << " ("
            << store.kind_ids(memir::AtomKind::Span).size() << " spans, "
            << store.kind_ids(memir::AtomKind::Handle).size() << " handles, "
            << store.kind_ids(memir::AtomKind::Time).size() << " times, "
            << store.kind_ids(memir::AtomKind::Pivot).size() << " pivots, "
            << store.kind_ids(memir::AtomKind::Claim).size() << " claims)\n"
            << "views: " << store.views().size() << "\n"
            << "rejections: " << result.report.rejections.size()
            << "  truncations: " << result.report.truncations.size()
            << "  provider_failures: " << result.report.provider_failures.size() << "\n"
            << "store: " << out_path << "\n";
  return result.report.partial() ? 2 : 0;
}

int run_query(const std::string& store_path, const std::string& question,
              const memir::PipelineProfile& profile, const std::string& trace_path) {
  memir::MemoryStore store = memir::load_store(store_path);
  memir::QueryEngine engine(store, memir::reference_providers(profile.retrieval.dense_dim),
                            profile);
  memir::QueryResponse r = engine.run(question);
  std::cout << memir::render_fact_interface(r.facts);
  if (r.answer.insufficient)
    std::cout << "ANSWER: INSUFFICIENT EVIDENCE\n";
  else
    std::cout << "ANSWER: " << r.answer.answer << "\n";
  if (!trace_path.empty()) write_file(trace_path, memir::serialize_trace(r.trace));
  return 0;
}

int run_trace(const std::string& trace_path) {
  std::ifstream in(trace_path, std::ios::binary);
  if (!in) throw memir::Error(memir::ErrorCode::IoError, "cannot open " + trace_path);
  memir::QueryTrace trace = memir::parse_trace(in);
  memir::validate_trace(trace);
  size_t route_hits = 0;
  for (const auto& [route, hits] : trace.route_hits) route_hits += hits.size();
  std::cout << "trace ok: " << route_hits << " route hits, " << trace.fused.size()
            << " fused, " << trace.bundles.size() << " bundles, "
            << trace.reranked.size() << " reranked, " << trace.selected.size()
            << " selected\n";
  return 0;
}

int run_eval(const std::string& store_path, const std::string& queries_path,
             const memir::PipelineProfile& profile, const std::string& records_path) {
  memir::MemoryStore store = memir::load_store(store_path);
  std::ifstream in(queries_path, std::ios::binary);
  if (!in) throw memir::Error(memir::ErrorCode::IoError, "cannot open " + queries_path);
  std::vector<memir::EvalQuery> queries = memir::load_eval_queries(in);
  std::vector<memir::EvalRun> runs = memir::run_eval_suite(
      store, queries, memir::reference_providers(profile.retrieval.dense_dim), profile);
  std::cout << memir::render_eval_table(runs);
  if (!records_path.empty()) write_file(records_path, memir::eval_records_jsonl(runs));
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"typed long-term memory engine"};
  app.require_subcommand(1);

  std::string profile_name = "locomo_default";
  std::string config_path;
  std::string ablate;
  app.add_option("--profile", profile_name, "locomo_default or beam_default");
  app.add_option("--config", config_path, "key/value overrides file");
  app.add_option("--ablate", ablate, "comma list: no_cues,no_claims,no_projection,no_bundles");

  CLI::App* ingest = app.add_subcommand("ingest", "compile a corpus into a store");
  std::string corpus_path, store_out, report_path, vectors_path;
  ingest->add_option("--corpus", corpus_path, "jsonl or locomo-shaped corpus")->required();
  ingest->add_option("--out", store_out, "store file to write")->required();
  ingest->add_option("--report", report_path, "write the compilation report here");
  ingest->add_option("--vectors", vectors_path, "write the dense vector table here");

  CLI::App* query = app.add_subcommand("query", "answer one question from a store");
  std::string store_path, question, trace_out;
  query->add_option("--store", store_path, "store file")->required();
  query->add_option("--question", question, "the question")->required();
  query->add_option("--trace", trace_out, "write the query trace here");

  CLI::App* trace = app.add_subcommand("trace", "validate a query trace file");
  std::string trace_in;
  trace->add_option("--in", trace_in, "trace file")->required();

  CLI::App* eval = app.add_subcommand("eval", "run the labeled-query suite");
  std::string eval_store, queries_path, records_path;
  eval->add_option("--store", eval_store, "store file")->required();
  eval->add_option("--queries", queries_path, "labeled queries, one JSON object per line")
      ->required();
  eval->add_option("--records", records_path, "write per-query records here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    memir::PipelineProfile profile = resolve_profile(profile_name, config_path, ablate);
    if (ingest->parsed())
      return run_ingest(corpus_path, store_out, profile, report_path, vectors_path);
    if (query->parsed()) return run_query(store_path, question, profile, trace_out);
    if (trace->parsed()) return run_trace(trace_in);
    if (eval->parsed()) return run_eval(eval_store, queries_path, profile, records_path);
  } catch (const memir::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
