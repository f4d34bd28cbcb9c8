// End-to-end checks of the command line front end, run as subprocesses.

#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "memir/retrieval.hpp"

namespace memir {
namespace {

struct CliResult {
  int code = -1;
  std::string output; // stdout and stderr interleaved
};

CliResult run_cli(const std::string& args) {
  std::string command = std::string(MEMIR_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(command.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed");
  CliResult result;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) result.output.append(buf, n);
  int status = pclose(pipe);
  result.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string fixture(const std::string& name) {
  return std::string(MEMIR_SOURCE_DIR) + "/fixtures/" + name;
}

std::string temp_path(const std::string& name) {
  return testing::TempDir() + "memir_cli_" + name;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  ASSERT_TRUE(out.good());
  out << content;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

TEST(Cli, IngestQueryTraceEvalRoundTrip) {
  std::string store = temp_path("store.jsonl");
  CliResult ingest =
      run_cli("ingest --corpus " + fixture("corpus.jsonl") + " --out " + store);
  EXPECT_EQ(ingest.code, 0) << ingest.output;
  EXPECT_NE(ingest.output.find("3 pages"), std::string::npos);

  std::string trace = temp_path("trace.jsonl");
  CliResult query = run_cli("query --store " + store +
                            " --question \"When did Joanna visit Machu Picchu?\""
                            " --trace " +
                            trace);
  EXPECT_EQ(query.code, 0) << query.output;
  EXPECT_NE(query.output.find("FACT[1] (direct)"), std::string::npos);
  EXPECT_NE(query.output.find("ANSWER: "), std::string::npos);
  EXPECT_NE(query.output.find("[2023-05-12]"), std::string::npos);

  CliResult check = run_cli("trace --in " + trace);
  EXPECT_EQ(check.code, 0) << check.output;
  EXPECT_NE(check.output.find("trace ok"), std::string::npos);

  std::string records = temp_path("records.jsonl");
  CliResult eval = run_cli("eval --store " + store + " --queries " +
                           fixture("queries.jsonl") + " --records " + records);
  EXPECT_EQ(eval.code, 0) << eval.output;
  EXPECT_NE(eval.output.find("recall@selection"), std::string::npos);
  EXPECT_NE(eval.output.find("full"), std::string::npos);
  EXPECT_NE(slurp(records).find("\"variant\":\"no_bundles\""), std::string::npos);
}

TEST(Cli, AdversarialQuestionReportsInsufficiency) {
  std::string store = temp_path("adv_store.jsonl");
  ASSERT_EQ(run_cli("ingest --corpus " + fixture("corpus.jsonl") + " --out " + store).code,
            0);
  CliResult query = run_cli("query --store " + store +
                            " --question \"What color is Nathan's motorcycle?\"");
  EXPECT_EQ(query.code, 0) << query.output;
  EXPECT_NE(query.output.find("ANSWER: INSUFFICIENT EVIDENCE"), std::string::npos);
}

TEST(Cli, MalformedCorpusNamesTheLineAndExitsOne) {
  std::string corpus = temp_path("bad_corpus.jsonl");
  write_file(corpus,
             "{\"session\":\"s1\",\"speaker\":\"Ana\",\"text\":\"Hello there friend.\"}\n"
             "this is not json\n");
  CliResult ingest =
      run_cli("ingest --corpus " + corpus + " --out " + temp_path("bad_store.jsonl"));
  EXPECT_EQ(ingest.code, 1) << ingest.output;
  EXPECT_NE(ingest.output.find("line 2"), std::string::npos);
}

TEST(Cli, MissingInputsExitOne) {
  EXPECT_EQ(run_cli("query --store /nonexistent/store.jsonl --question hi").code, 1);
  EXPECT_EQ(run_cli("trace --in /nonexistent/trace.jsonl").code, 1);
  EXPECT_EQ(run_cli("--profile bogus query --store x --question y").code, 1);
  EXPECT_EQ(run_cli("frobnicate").code, 1);
}

TEST(Cli, UnresolvedGoldIdExitsOne) {
  std::string store = temp_path("gold_store.jsonl");
  ASSERT_EQ(run_cli("ingest --corpus " + fixture("corpus.jsonl") + " --out " + store).code,
            0);
  std::string queries = temp_path("bad_gold.jsonl");
  write_file(queries,
             "{\"id\":\"q1\",\"question\":\"who\",\"gold_claim_ids\":[\"C9:99\"]}\n");
  CliResult eval = run_cli("eval --store " + store + " --queries " + queries);
  EXPECT_EQ(eval.code, 1) << eval.output;
  EXPECT_NE(eval.output.find("UnresolvedGoldId"), std::string::npos);
}

TEST(Cli, EmptyQueryFileExitsZero) {
  std::string store = temp_path("empty_store.jsonl");
  ASSERT_EQ(run_cli("ingest --corpus " + fixture("corpus.jsonl") + " --out " + store).code,
            0);
  std::string queries = temp_path("empty_queries.jsonl");
  write_file(queries, "");
  CliResult eval = run_cli("eval --store " + store + " --queries " + queries);
  EXPECT_EQ(eval.code, 0) << eval.output;
}

TEST(Cli, ConfigFileTightensTheBudget) {
  std::string store = temp_path("cfg_store.jsonl");
  ASSERT_EQ(run_cli("ingest --corpus " + fixture("corpus.jsonl") + " --out " + store).code,
            0);
  std::string config = temp_path("budget.cfg");
  write_file(config, "utilization.select_budget_x = 2\n");
  CliResult query = run_cli("--config " + config + " query --store " + store +
                            " --question \"When did Joanna visit Machu Picchu?\"");
  EXPECT_EQ(query.code, 0) << query.output;
  EXPECT_NE(query.output.find("FACT[2]"), std::string::npos);
  EXPECT_EQ(query.output.find("FACT[3]"), std::string::npos);
}

TEST(Cli, AblationFlagFlowsThroughQuery) {
  std::string store = temp_path("abl_store.jsonl");
  ASSERT_EQ(run_cli("ingest --corpus " + fixture("corpus.jsonl") + " --out " + store).code,
            0);
  std::string trace = temp_path("abl_trace.jsonl");
  CliResult query = run_cli("--ablate no_cues,no_bundles query --store " + store +
                            " --question \"When did Joanna visit Machu Picchu?\" --trace " +
                            trace);
  EXPECT_EQ(query.code, 0) << query.output;
  std::string written = slurp(trace);
  EXPECT_NE(written.find("\"ablation\":[\"no_cues\",\"no_bundles\"]"), std::string::npos);
  EXPECT_EQ(run_cli("trace --in " + trace).code, 0);
}

TEST(Cli, VectorTableOptionWritesReadableTable) {
  std::string store = temp_path("vec_store.jsonl");
  std::string vectors = temp_path("vectors.bin");
  ASSERT_EQ(run_cli("ingest --corpus " + fixture("corpus.jsonl") + " --out " + store +
                    " --vectors " + vectors)
                .code,
            0);
  std::ifstream in(vectors, std::ios::binary);
  ASSERT_TRUE(in.good());
  std::vector<RetrievalIndexes::DenseEntry> entries = read_vector_table(in);
  ASSERT_FALSE(entries.empty());
  for (const auto& entry : entries) EXPECT_EQ(entry.vector.size(), 1024u);
}

TEST(Cli, TamperedTraceFailsValidation) {
  std::string store = temp_path("tam_store.jsonl");
  ASSERT_EQ(run_cli("ingest --corpus " + fixture("corpus.jsonl") + " --out " + store).code,
            0);
  std::string trace = temp_path("tam_trace.jsonl");
  ASSERT_EQ(run_cli("query --store " + store +
                    " --question \"Who celebrated at Cafe Roma?\" --trace " + trace)
                .code,
            0);
  std::string text = slurp(trace);
  size_t pos = text.find("\"rho\":");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 7, "\"rho\":9");
  std::string tampered = temp_path("tampered_trace.jsonl");
  write_file(tampered, text);
  CliResult check = run_cli("trace --in " + tampered);
  EXPECT_EQ(check.code, 1) << check.output;
  EXPECT_NE(check.output.find("trace"), std::string::npos);
}

} // namespace
} // namespace memir
