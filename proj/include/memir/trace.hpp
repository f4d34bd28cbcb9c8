#pragma once

#include <cmath>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memir/profiles.hpp"
#include "memir/projection.hpp"
#include "memir/retrieval.hpp"
#include "memir/utilization.hpp"

namespace memir {

struct TraceBundle {
  AtomId head;
  bool claim_headed = true;
  double rho = 0.0;
  std::vector<AtomId> closure;
  std::vector<AtomId> members; // member hit atoms in fused order
};

struct TraceRerank {
  AtomId head;
  double rank_score = 0.0;
  double rho = 0.0;
};

struct TraceSelect {
  AtomId head;
  FactRole role = FactRole::Support;
  double rank_score = 0.0;
};

// Everything a query run decided, in pipeline order. The validator
// recomputes every stage invariant from the trace alone.
struct QueryTrace {
  std::string query;
  std::string profile_name;
  AblationFlags ablation;
  double rrf_k = 60.0;
  size_t per_route_k = 32;
  size_t pool_m = 32;
  size_t rerank_keep_k = 32;
  size_t select_budget_x = 6;

  std::map<RouteId, std::vector<RouteHit>> route_hits; // post-merge, per route
  std::vector<FusedHit> fused;
  std::vector<TraceBundle> bundles; // rho order, pre-rerank
  std::vector<AtomId> discarded;    // hits whose projection was empty
  bool scorer_fallback = false;
  std::vector<TraceRerank> reranked;
  bool selector_fallback = false;
  std::vector<TraceSelect> selected;
  size_t fact_count = 0;
  bool sufficient = false;
  bool answer_insufficient = false;
};

namespace detail {

inline std::vector<std::string> ablation_names(const AblationFlags& flags) {
  std::vector<std::string> names;
  if (flags.no_claims) names.push_back("no_claims");
  if (flags.no_cues) names.push_back("no_cues");
  if (flags.no_projection) names.push_back("no_projection");
  if (flags.no_bundles) names.push_back("no_bundles");
  return names;
}

inline nlohmann::json id_array(const std::vector<AtomId>& ids) {
  nlohmann::json arr = nlohmann::json::array();
  for (AtomId id : ids) arr.push_back(id.render());
  return arr;
}

} // namespace detail

inline std::string serialize_trace(const QueryTrace& trace) {
  std::string out;
  nlohmann::json header{{"type", "header"},
                        {"query", trace.query},
                        {"profile", trace.profile_name},
                        {"ablation", detail::ablation_names(trace.ablation)},
                        {"rrf_k", trace.rrf_k},
                        {"per_route_k", trace.per_route_k},
                        {"pool_m", trace.pool_m},
                        {"rerank_keep_k", trace.rerank_keep_k},
                        {"select_budget_x", trace.select_budget_x}};
  out += header.dump() + "\n";
  for (const auto& [route, hits] : trace.route_hits) {
    for (const RouteHit& hit : hits) {
      nlohmann::json rec{{"type", "route_hit"},
                         {"route", to_string(route)},
                         {"atom", hit.atom_id.render()},
                         {"rank", hit.rank},
                         {"score", hit.raw_score}};
      out += rec.dump() + "\n";
    }
  }
  for (const FusedHit& hit : trace.fused) {
    nlohmann::json routes = nlohmann::json::object();
    for (const auto& [route, rank] : hit.contributing_routes)
      routes[to_string(route)] = rank;
    nlohmann::json rec{{"type", "fused"},
                       {"atom", hit.atom_id.render()},
                       {"s_ret", hit.s_ret},
                       {"routes", routes}};
    out += rec.dump() + "\n";
  }
  for (const TraceBundle& b : trace.bundles) {
    nlohmann::json rec{{"type", "bundle"},
                       {"head", b.head.render()},
                       {"claim_headed", b.claim_headed},
                       {"rho", b.rho},
                       {"closure", detail::id_array(b.closure)},
                       {"members", detail::id_array(b.members)}};
    out += rec.dump() + "\n";
  }
  for (AtomId atom : trace.discarded) {
    nlohmann::json rec{{"type", "discarded"}, {"atom", atom.render()}};
    out += rec.dump() + "\n";
  }
  for (const TraceRerank& r : trace.reranked) {
    nlohmann::json rec{{"type", "rerank"},
                       {"head", r.head.render()},
                       {"rank_score", r.rank_score},
                       {"rho", r.rho}};
    out += rec.dump() + "\n";
  }
  for (const TraceSelect& s : trace.selected) {
    nlohmann::json rec{{"type", "select"},
                       {"head", s.head.render()},
                       {"role", to_string(s.role)},
                       {"rank_score", s.rank_score}};
    out += rec.dump() + "\n";
  }
  nlohmann::json summary{{"type", "summary"},
                         {"fact_count", trace.fact_count},
                         {"sufficient", trace.sufficient},
                         {"answer_insufficient", trace.answer_insufficient},
                         {"scorer_fallback", trace.scorer_fallback},
                         {"selector_fallback", trace.selector_fallback}};
  out += summary.dump() + "\n";
  return out;
}

namespace detail {

inline AtomId trace_id(const nlohmann::json& rec, const char* key, size_t line) {
  auto parsed = AtomId::try_parse(rec.at(key).get<std::string>());
  if (!parsed)
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(line) + ": bad atom id in '" + key + "'");
  return *parsed;
}

} // namespace detail

inline QueryTrace parse_trace(std::istream& in) {
  QueryTrace trace;
  std::string raw;
  size_t line = 0;
  bool saw_header = false;
  while (std::getline(in, raw)) {
    ++line;
    if (raw.empty()) continue;
    nlohmann::json rec = nlohmann::json::parse(raw, nullptr, false);
    if (rec.is_discarded())
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": not JSON");
    try {
      std::string type = rec.at("type").get<std::string>();
      if (type == "header") {
        saw_header = true;
        trace.query = rec.at("query").get<std::string>();
        trace.profile_name = rec.at("profile").get<std::string>();
        for (const auto& name : rec.at("ablation")) {
          AblationFlags one = parse_ablation_list(name.get<std::string>());
          trace.ablation.no_claims |= one.no_claims;
          trace.ablation.no_cues |= one.no_cues;
          trace.ablation.no_projection |= one.no_projection;
          trace.ablation.no_bundles |= one.no_bundles;
        }
        trace.rrf_k = rec.at("rrf_k").get<double>();
        trace.per_route_k = rec.at("per_route_k").get<size_t>();
        trace.pool_m = rec.at("pool_m").get<size_t>();
        trace.rerank_keep_k = rec.at("rerank_keep_k").get<size_t>();
        trace.select_budget_x = rec.at("select_budget_x").get<size_t>();
      } else if (type == "route_hit") {
        RouteHit hit;
        hit.route = route_from_string(rec.at("route").get<std::string>());
        hit.atom_id = detail::trace_id(rec, "atom", line);
        hit.rank = rec.at("rank").get<size_t>();
        hit.raw_score = rec.at("score").get<double>();
        trace.route_hits[hit.route].push_back(hit);
      } else if (type == "fused") {
        FusedHit hit;
        hit.atom_id = detail::trace_id(rec, "atom", line);
        hit.s_ret = rec.at("s_ret").get<double>();
        for (const auto& [name, rank] : rec.at("routes").items())
          hit.contributing_routes[route_from_string(name)] = rank.get<size_t>();
        trace.fused.push_back(std::move(hit));
      } else if (type == "bundle") {
        TraceBundle b;
        b.head = detail::trace_id(rec, "head", line);
        b.claim_headed = rec.at("claim_headed").get<bool>();
        b.rho = rec.at("rho").get<double>();
        for (const auto& id : rec.at("closure")) {
          auto parsed = AtomId::try_parse(id.get<std::string>());
          if (!parsed)
            throw Error(ErrorCode::ParseError,
                        "line " + std::to_string(line) + ": bad closure id");
          b.closure.push_back(*parsed);
        }
        for (const auto& id : rec.at("members")) {
          auto parsed = AtomId::try_parse(id.get<std::string>());
          if (!parsed)
            throw Error(ErrorCode::ParseError,
                        "line " + std::to_string(line) + ": bad member id");
          b.members.push_back(*parsed);
        }
        trace.bundles.push_back(std::move(b));
      } else if (type == "discarded") {
        trace.discarded.push_back(detail::trace_id(rec, "atom", line));
      } else if (type == "rerank") {
        TraceRerank r;
        r.head = detail::trace_id(rec, "head", line);
        r.rank_score = rec.at("rank_score").get<double>();
        r.rho = rec.at("rho").get<double>();
        trace.reranked.push_back(r);
      } else if (type == "select") {
        TraceSelect s;
        s.head = detail::trace_id(rec, "head", line);
        std::string role = rec.at("role").get<std::string>();
        if (role == "direct") s.role = FactRole::Direct;
        else if (role == "support") s.role = FactRole::Support;
        else
          throw Error(ErrorCode::ParseError,
                      "line " + std::to_string(line) + ": unknown role '" + role + "'");
        s.rank_score = rec.at("rank_score").get<double>();
        trace.selected.push_back(s);
      } else if (type == "summary") {
        trace.fact_count = rec.at("fact_count").get<size_t>();
        trace.sufficient = rec.at("sufficient").get<bool>();
        trace.answer_insufficient = rec.at("answer_insufficient").get<bool>();
        trace.scorer_fallback = rec.at("scorer_fallback").get<bool>();
        trace.selector_fallback = rec.at("selector_fallback").get<bool>();
      } else {
        throw Error(ErrorCode::ParseError,
                    "line " + std::to_string(line) + ": unknown record type '" + type + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError,
                  "line " + std::to_string(line) + ": " + e.what());
    }
  }
  if (!saw_header) throw Error(ErrorCode::ParseError, "trace has no header record");
  return trace;
}

namespace detail {

inline void trace_check(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::CorruptRecord, "trace: " + what);
}

} // namespace detail

// Recomputes the stage invariants a well-formed run must satisfy:
// route rank discipline, fusion arithmetic, bundle mass, pool and
// budget limits, fallback shapes, and the ablation structure rules.
inline void validate_trace(const QueryTrace& trace) {
  constexpr double kTol = 1e-9;

  for (const auto& [route, hits] : trace.route_hits) {
    for (size_t i = 0; i < hits.size(); ++i) {
      detail::trace_check(hits[i].rank == i + 1,
                          to_string(route) + std::string(" ranks not consecutive"));
      detail::trace_check(hits[i].rank <= trace.per_route_k,
                          to_string(route) + std::string(" exceeds per_route_k"));
      if (i)
        detail::trace_check(hits[i - 1].raw_score >= hits[i].raw_score,
                            to_string(route) + std::string(" scores increase with rank"));
    }
  }

  std::map<AtomId, double> fused_score;
  for (size_t i = 0; i < trace.fused.size(); ++i) {
    const FusedHit& hit = trace.fused[i];
    detail::trace_check(fused_score.emplace(hit.atom_id, hit.s_ret).second,
                        "duplicate fused atom " + hit.atom_id.render());
    detail::trace_check(!hit.contributing_routes.empty(),
                        "fused hit with no contributing routes");
    double expected = 0.0;
    for (const auto& [route, rank] : hit.contributing_routes) {
      expected += 1.0 / (trace.rrf_k + static_cast<double>(rank));
      auto it = trace.route_hits.find(route);
      detail::trace_check(it != trace.route_hits.end(),
                          "fused hit cites absent route " + std::string(to_string(route)));
      bool found = false;
      for (const RouteHit& rh : it->second)
        found = found || (rh.rank == rank && rh.atom_id == hit.atom_id);
      detail::trace_check(found, "fused hit cites rank not in route list");
    }
    detail::trace_check(std::fabs(expected - hit.s_ret) <= kTol,
                        "fused score mismatch for " + hit.atom_id.render());
    if (i) {
      const FusedHit& prev = trace.fused[i - 1];
      detail::trace_check(prev.s_ret > hit.s_ret ||
                              (prev.s_ret == hit.s_ret && prev.atom_id < hit.atom_id),
                          "fused hits out of order");
    }
  }

  std::set<AtomId> bundle_heads;
  std::set<AtomId> pool_heads;
  for (size_t i = 0; i < trace.bundles.size(); ++i) {
    const TraceBundle& b = trace.bundles[i];
    detail::trace_check(bundle_heads.insert(b.head).second,
                        "duplicate bundle head " + b.head.render());
    if (i < trace.pool_m) pool_heads.insert(b.head);
    detail::trace_check(!b.members.empty(), "bundle with no member hits");
    detail::trace_check(!b.closure.empty(), "bundle with empty closure");
    detail::trace_check(b.claim_headed == (b.head.kind == AtomKind::Claim),
                        "claim_headed flag contradicts head kind");
    double mass = 0.0;
    for (AtomId member : b.members) {
      auto it = fused_score.find(member);
      detail::trace_check(it != fused_score.end(),
                          "bundle member not among fused hits: " + member.render());
      mass += it->second;
    }
    detail::trace_check(std::fabs(mass - b.rho) <= kTol,
                        "bundle mass mismatch for " + b.head.render());
    if (i) {
      const TraceBundle& prev = trace.bundles[i - 1];
      detail::trace_check(prev.rho > b.rho || (prev.rho == b.rho && prev.head < b.head),
                          "bundles out of rho order");
    }
    if (trace.ablation.no_claims)
      detail::trace_check(!b.claim_headed, "no_claims run produced a claim-headed bundle");
    if (trace.ablation.no_bundles)
      detail::trace_check(b.closure.size() == 1 && b.closure[0] == b.head,
                          "no_bundles run kept a closure");
    if (trace.ablation.no_cues)
      for (AtomId id : b.closure)
        detail::trace_check(id.kind != AtomKind::Handle && id.kind != AtomKind::Time &&
                                id.kind != AtomKind::Pivot,
                            "no_cues run kept a cue in a closure");
  }

  size_t pool = std::min(trace.pool_m, trace.bundles.size());
  detail::trace_check(trace.reranked.size() <= std::min(trace.rerank_keep_k, pool),
                      "rerank kept more than the pool allows");
  std::set<AtomId> reranked_heads;
  for (size_t i = 0; i < trace.reranked.size(); ++i) {
    const TraceRerank& r = trace.reranked[i];
    detail::trace_check(pool_heads.count(r.head) > 0,
                        "reranked head outside the rho-top pool: " + r.head.render());
    detail::trace_check(reranked_heads.insert(r.head).second,
                        "duplicate reranked head " + r.head.render());
    if (trace.scorer_fallback)
      detail::trace_check(r.rank_score == 0.0, "fallback rerank carries scores");
    else if (i)
      detail::trace_check(trace.reranked[i - 1].rank_score >= r.rank_score,
                          "rerank scores out of order");
  }

  detail::trace_check(trace.selected.size() <= trace.select_budget_x,
                      "selection exceeds budget");
  std::set<AtomId> selected_heads;
  for (size_t i = 0; i < trace.selected.size(); ++i) {
    const TraceSelect& s = trace.selected[i];
    detail::trace_check(reranked_heads.count(s.head) > 0,
                        "selected head was never reranked: " + s.head.render());
    detail::trace_check(selected_heads.insert(s.head).second,
                        "duplicate selected head " + s.head.render());
    if (trace.selector_fallback) {
      detail::trace_check(s.role == FactRole::Direct, "fallback selection not direct");
      detail::trace_check(s.head == trace.reranked[i].head,
                          "fallback selection not the rerank prefix");
    }
  }

  detail::trace_check(trace.fact_count == trace.selected.size(),
                      "fact count disagrees with selection");
  bool any_direct = false;
  for (const TraceSelect& s : trace.selected) any_direct |= s.role == FactRole::Direct;
  detail::trace_check(trace.sufficient == any_direct, "sufficiency flag wrong");
  detail::trace_check(trace.answer_insufficient == (trace.fact_count == 0 || !trace.sufficient),
                      "answer insufficiency flag wrong");
}

} // namespace memir
