#pragma once
// Prompt template assets for LLM-backed providers. The reference
// pipeline never calls a model; these ship so a model-backed provider
// can be dropped in without inventing prompts.

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "memir/errors.hpp"

namespace memir {

struct PromptAsset {
  std::string name;
  std::string template_text;
  std::vector<std::string> variables;

  // A variable may appear as a {{name}} placeholder or as a
  // backtick-quoted field reference.
  bool mentions(const std::string& variable) const {
    return template_text.find("{{" + variable + "}}") != std::string::npos ||
           template_text.find("`" + variable + "`") != std::string::npos;
  }
};

inline PromptAsset load_prompt_asset(const std::string& path, std::string name,
                                     std::vector<std::string> variables) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open prompt asset '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  PromptAsset asset{std::move(name), text.str(), std::move(variables)};
  for (const std::string& variable : asset.variables)
    if (!asset.mentions(variable))
      throw Error(ErrorCode::ParseError,
                  "prompt asset '" + asset.name + "' never mentions variable '" + variable + "'");
  return asset;
}

// Substitutes {{name}} placeholders. Placeholders without a value and
// values without a placeholder are both errors; backtick field
// references stay as they are.
inline std::string render_prompt(const PromptAsset& asset,
                                 const std::map<std::string, std::string>& values) {
  std::string out = asset.template_text;
  for (const auto& [name, value] : values) {
    std::string placeholder = "{{" + name + "}}";
    size_t at = out.find(placeholder);
    if (at == std::string::npos) {
      if (asset.mentions(name)) continue; // backtick-only reference
      throw Error(ErrorCode::ParseError,
                  "prompt asset '" + asset.name + "' has no placeholder '" + name + "'");
    }
    while (at != std::string::npos) {
      out.replace(at, placeholder.size(), value);
      at = out.find(placeholder, at + value.size());
    }
  }
  size_t open = out.find("{{");
  if (open != std::string::npos) {
    size_t close = out.find("}}", open);
    throw Error(ErrorCode::ParseError,
                "prompt asset '" + asset.name + "' has unbound placeholder " +
                    out.substr(open, close == std::string::npos ? 12 : close + 2 - open));
  }
  return out;
}

struct PromptLibrary {
  PromptAsset handle_extraction;
  PromptAsset pivot_extraction;
  PromptAsset claim_writing;
  PromptAsset bundle_selection;

  static PromptLibrary load(const std::string& dir) {
    return PromptLibrary{
        load_prompt_asset(dir + "/handle_extraction.txt", "handle_extraction",
                          {"handle_usual_max", "handle_max", "handle_max_word"}),
        load_prompt_asset(dir + "/pivot_extraction.txt", "pivot_extraction",
                          {"pivot_usual_max", "pivot_max", "pivot_max_word"}),
        load_prompt_asset(dir + "/claim_writing.txt", "claim_writing",
                          {"page.max_claim_units"}),
        load_prompt_asset(dir + "/bundle_selection.txt", "bundle_selection",
                          {"Bundle_max"}),
    };
  }
};

} // namespace memir
