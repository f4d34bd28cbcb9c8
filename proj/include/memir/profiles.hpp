#pragma once

#include <cstdlib>
#include <istream>
#include <string>

#include "memir/compile.hpp"
#include "memir/retrieval.hpp"
#include "memir/utilization.hpp"

namespace memir {

// Each flag removes one pipeline structure; none may add any.
struct AblationFlags {
  bool no_claims = false;
  bool no_cues = false;
  bool no_projection = false;
  bool no_bundles = false;

  bool any() const { return no_claims || no_cues || no_projection || no_bundles; }
};

inline AblationFlags parse_ablation_list(std::string_view list) {
  AblationFlags flags;
  size_t pos = 0;
  while (pos <= list.size()) {
    size_t comma = list.find(',', pos);
    if (comma == std::string_view::npos) comma = list.size();
    std::string_view name = list.substr(pos, comma - pos);
    if (name == "no_claims") flags.no_claims = true;
    else if (name == "no_cues") flags.no_cues = true;
    else if (name == "no_projection") flags.no_projection = true;
    else if (name == "no_bundles") flags.no_bundles = true;
    else if (!name.empty())
      throw Error(ErrorCode::ParseError, "unknown ablation flag: " + std::string(name));
    pos = comma + 1;
  }
  return flags;
}

struct PipelineProfile {
  std::string name = "custom";
  CompileConfig compile;
  RetrievalConfig retrieval;
  UtilizationConfig utilization;
  AblationFlags ablation;
};

inline PipelineProfile locomo_default_profile() {
  PipelineProfile p;
  p.name = "locomo_default";
  p.compile.max_claims_per_page = 12;
  p.retrieval.per_route_k = 32;
  p.utilization.pool_m = 32;
  p.utilization.rerank_keep_k = 32;
  p.utilization.select_budget_x = 6;
  return p;
}

inline PipelineProfile beam_default_profile() {
  PipelineProfile p;
  p.name = "beam_default";
  p.compile.max_claims_per_page = 18;
  p.retrieval.per_route_k = 72;
  p.utilization.pool_m = 72;
  p.utilization.rerank_keep_k = 72;
  p.utilization.select_budget_x = 10;
  return p;
}

inline PipelineProfile profile_from_name(std::string_view name) {
  if (name == "locomo_default") return locomo_default_profile();
  if (name == "beam_default") return beam_default_profile();
  throw Error(ErrorCode::ParseError, "unknown profile: " + std::string(name));
}

namespace detail {

inline size_t config_size(const std::string& value, size_t line) {
  char* end = nullptr;
  unsigned long long n = std::strtoull(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0')
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(line) + ": expected an integer, got '" + value + "'");
  return static_cast<size_t>(n);
}

inline double config_double(const std::string& value, size_t line) {
  char* end = nullptr;
  double d = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0')
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(line) + ": expected a number, got '" + value + "'");
  return d;
}

inline std::string config_trim(std::string_view text) {
  size_t b = text.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return "";
  size_t e = text.find_last_not_of(" \t\r");
  return std::string(text.substr(b, e - b + 1));
}

} // namespace detail

// Flat key/value overrides, one `section.key = value` per line. '#'
// starts a comment. Any applied key renames the profile to custom.
inline void apply_config(PipelineProfile& profile, std::istream& in) {
  std::string raw;
  size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (size_t hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    std::string text = detail::config_trim(raw);
    if (text.empty()) continue;
    size_t eq = text.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::ParseError,
                  "line " + std::to_string(line) + ": expected key = value");
    std::string key = detail::config_trim(text.substr(0, eq));
    std::string value = detail::config_trim(text.substr(eq + 1));

    if (key == "compile.max_claims_per_page")
      profile.compile.max_claims_per_page = detail::config_size(value, line);
    else if (key == "compile.page_policy") {
      if (value == "by_session") profile.compile.page_policy = PagePolicy::BySession;
      else if (value == "fixed_window") profile.compile.page_policy = PagePolicy::FixedWindow;
      else
        throw Error(ErrorCode::ParseError,
                    "line " + std::to_string(line) + ": unknown page policy '" + value + "'");
    } else if (key == "compile.window_size")
      profile.compile.window_size = detail::config_size(value, line);
    else if (key == "retrieval.per_route_k")
      profile.retrieval.per_route_k = detail::config_size(value, line);
    else if (key == "retrieval.rrf_k")
      profile.retrieval.rrf_k = detail::config_double(value, line);
    else if (key == "retrieval.bm25_k1")
      profile.retrieval.bm25_k1 = detail::config_double(value, line);
    else if (key == "retrieval.bm25_b")
      profile.retrieval.bm25_b = detail::config_double(value, line);
    else if (key == "retrieval.dense_dim")
      profile.retrieval.dense_dim = detail::config_size(value, line);
    else if (key == "utilization.pool_m")
      profile.utilization.pool_m = detail::config_size(value, line);
    else if (key == "utilization.rerank_keep_k")
      profile.utilization.rerank_keep_k = detail::config_size(value, line);
    else if (key == "utilization.select_budget_x")
      profile.utilization.select_budget_x = detail::config_size(value, line);
    else if (key == "utilization.max_span_excerpts")
      profile.utilization.serialization_caps.max_span_excerpts = detail::config_size(value, line);
    else if (key == "utilization.max_chars")
      profile.utilization.serialization_caps.max_chars = detail::config_size(value, line);
    else if (key == "utilization.provider_timeout_ms")
      profile.utilization.provider_timeout_ms = detail::config_size(value, line);
    else
      throw Error(ErrorCode::ParseError,
                  "line " + std::to_string(line) + ": unknown key '" + key + "'");
    profile.name = "custom";
  }
}

} // namespace memir
