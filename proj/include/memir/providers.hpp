#pragma once
// Provider contracts: the replaceable seams where a model-backed
// implementation can sit. Everything a provider returns is untrusted
// and re-validated by the calling module; the engine only requires
// determinism from the shipped reference implementations.

#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "memir/atoms.hpp"

namespace memir {

// Cue proposals and stored cue inventories share one shape; proposals
// carry unset ids.
struct PageCues {
  std::vector<HandleAtom> handles;
  std::vector<TimeAtom> times;
  std::vector<PivotAtom> pivots;

  bool empty() const { return handles.empty() && times.empty() && pivots.empty(); }
};

class CueExtractor {
public:
  virtual ~CueExtractor() = default;
  virtual PageCues extract(const PageAtom& page, const std::vector<SpanAtom>& spans) = 0;
};

class ClaimWriter {
public:
  virtual ~ClaimWriter() = default;
  virtual std::vector<ClaimAtom> write(const PageAtom& page,
                                       const std::vector<SpanAtom>& spans,
                                       const PageCues& cues, size_t budget) = 0;
};

class Embedder {
public:
  virtual ~Embedder() = default;
  virtual size_t dimension() const = 0;
  virtual std::vector<float> embed(std::string_view text) = 0;
};

class BundleScorer {
public:
  virtual ~BundleScorer() = default;
  virtual double score(std::string_view query, std::string_view serialized_bundle) = 0;
};

enum class FactRole { Direct, Support };

inline const char* to_string(FactRole role) {
  return role == FactRole::Direct ? "direct" : "support";
}

class BundleSelector {
public:
  struct Selection {
    AtomId bundle_id; // head atom of the chosen bundle
    FactRole role = FactRole::Support;
  };

  virtual ~BundleSelector() = default;
  virtual std::vector<Selection> select(
      std::string_view query,
      const std::vector<std::pair<AtomId, std::string>>& serialized_bundles,
      size_t max_selected) = 0;
};

struct AnswerOutcome {
  bool insufficient = false; // no direct evidence; no answer produced
  std::string answer;        // meaningful only when sufficient
};

class AnswerComposer {
public:
  virtual ~AnswerComposer() = default;
  virtual AnswerOutcome compose(std::string_view query, std::string_view rendered_interface) = 0;
};

struct ProviderSet {
  std::shared_ptr<CueExtractor> cue_extractor;
  std::shared_ptr<ClaimWriter> claim_writer;
  std::shared_ptr<Embedder> embedder;
  std::shared_ptr<BundleScorer> scorer;
  std::shared_ptr<BundleSelector> selector;
  std::shared_ptr<AnswerComposer> composer;
};

} // namespace memir
