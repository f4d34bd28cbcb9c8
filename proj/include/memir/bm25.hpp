#pragma once
// Okapi BM25 over tokenized documents. Documents are dense ordinals in
// insertion order; only documents sharing at least one query term are
// scored. Query terms are deduplicated and walked in sorted order so
// floating-point accumulation is reproducible.

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace memir {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

class Bm25Index {
public:
  size_t add_document(const std::vector<std::string>& tokens) {
    size_t doc = doc_lengths_.size();
    doc_lengths_.push_back(tokens.size());
    total_length_ += static_cast<double>(tokens.size());
    std::map<std::string, uint32_t> tf;
    for (const std::string& t : tokens) ++tf[t];
    for (auto& [term, count] : tf) postings_[term].emplace_back(doc, count);
    return doc;
  }

  size_t size() const { return doc_lengths_.size(); }

  // idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)), always positive, so
  // every shared term contributes a positive score.
  std::vector<std::pair<size_t, double>> score(const std::vector<std::string>& query_tokens,
                                               const Bm25Params& params) const {
    std::vector<std::pair<size_t, double>> out;
    if (doc_lengths_.empty()) return out;
    double n = static_cast<double>(doc_lengths_.size());
    double avgdl = total_length_ / n;

    std::set<std::string> terms(query_tokens.begin(), query_tokens.end());
    std::map<size_t, double> acc;
    for (const std::string& term : terms) {
      auto it = postings_.find(term);
      if (it == postings_.end()) continue;
      double df = static_cast<double>(it->second.size());
      double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
      for (auto [doc, tf] : it->second) {
        double dl = static_cast<double>(doc_lengths_[doc]);
        double norm = params.k1 * (1.0 - params.b + params.b * dl / avgdl);
        acc[doc] += idf * (static_cast<double>(tf) * (params.k1 + 1.0)) /
                    (static_cast<double>(tf) + norm);
      }
    }
    out.assign(acc.begin(), acc.end());
    return out;
  }

private:
  std::vector<size_t> doc_lengths_;
  std::unordered_map<std::string, std::vector<std::pair<size_t, uint32_t>>> postings_;
  double total_length_ = 0.0;
};

} // namespace memir
