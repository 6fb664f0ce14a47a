#include "execopt/solver_recommender.hpp"

#include <algorithm>
#include <set>

#include "execopt/errors.hpp"

namespace execopt {

std::string render_recommend_prompt(const DecisionProcess& p,
                                    const std::vector<std::string>& available) {
  Json names = Json::array();
  for (const auto& s : available) names.push_back(s);
  std::string prompt =
      "Recommend solver backends for the optimization model below, ranked from most to least "
      "suitable (rank 1 = best). Only choose from the available solvers.\n\n";
  prompt += "Available solvers: " + names.dump() + "\n\n";
  prompt += "Model:\n" + serialize_decision_process(p) + "\n\n";
  prompt +=
      "Return ONLY a JSON object of the form\n"
      "{\"recommendations\": [{\"solver\": \"...\", \"rank\": 1, \"rationale\": \"...\", "
      "\"setup_notes\": \"...\"}]}\n";
  return prompt;
}

Json recommendations_to_json(const std::vector<SolverRecommendation>& recs) {
  Json list = Json::array();
  for (const auto& r : recs) {
    Json j = Json::object();
    j["solver"] = r.solver;
    j["rank"] = r.rank;
    j["rationale"] = r.rationale;
    j["setup_notes"] = r.setup_notes;
    list.push_back(std::move(j));
  }
  Json doc = Json::object();
  doc["recommendations"] = std::move(list);
  return doc;
}

std::vector<SolverRecommendation> recommendations_from_json(const Json& doc) {
  if (!doc.is_object() || !doc.contains("recommendations") || !doc["recommendations"].is_array()) {
    throw ContractViolation("recommendation reply lacks a 'recommendations' array");
  }
  std::vector<SolverRecommendation> out;
  for (const auto& item : doc["recommendations"]) {
    if (!item.is_object() || !item.contains("solver") || !item["solver"].is_string()) {
      throw ContractViolation("recommendation entry lacks a string 'solver'");
    }
    SolverRecommendation r;
    r.solver = item["solver"].get<std::string>();
    if (item.contains("rank")) {
      if (!item["rank"].is_number_integer() || item["rank"].get<int>() < 1) {
        throw ContractViolation("recommendation rank must be a positive integer");
      }
      r.rank = item["rank"].get<int>();
    } else {
      r.rank = static_cast<int>(out.size()) + 1;
    }
    if (item.contains("rationale") && item["rationale"].is_string()) {
      r.rationale = item["rationale"].get<std::string>();
    }
    if (item.contains("setup_notes") && item["setup_notes"].is_string()) {
      r.setup_notes = item["setup_notes"].get<std::string>();
    }
    out.push_back(std::move(r));
  }
  return out;
}

RecommendationResult recommend(const DecisionProcess& p, const std::vector<std::string>& available,
                               LlmProvider& llm, const std::string& run_id) {
  if (available.empty()) throw ConfigError("no solvers available to recommend from");
  ProviderRequest req;
  req.kind = RequestKind::Recommend;
  req.prompt = render_recommend_prompt(p, available);
  req.run_id = run_id;
  const std::string reply = llm.complete(req);

  RecommendationResult result;
  std::vector<SolverRecommendation> proposed;
  try {
    Json doc;
    try {
      doc = Json::parse(reply);
    } catch (const Json::parse_error& e) {
      throw ContractViolation(std::string("recommendation reply is not JSON: ") + e.what());
    }
    proposed = recommendations_from_json(doc);
  } catch (const ContractViolation& e) {
    result.warnings.push_back(e.what());
  }
  std::stable_sort(proposed.begin(), proposed.end(),
                   [](const auto& a, const auto& b) { return a.rank < b.rank; });

  const std::set<std::string> known(available.begin(), available.end());
  std::set<std::string> seen;
  for (auto& r : proposed) {
    if (!known.count(r.solver)) {
      result.warnings.push_back("dropped unavailable solver '" + r.solver + "'");
      continue;
    }
    if (!seen.insert(r.solver).second) {
      result.warnings.push_back("dropped duplicate solver '" + r.solver + "'");
      continue;
    }
    r.rank = static_cast<int>(result.recommendations.size()) + 1;
    result.recommendations.push_back(std::move(r));
  }

  if (result.recommendations.empty()) {
    result.fallback = true;
    result.warnings.push_back("no usable recommendation; using available solvers in listed order");
    for (const auto& s : available) {
      if (!seen.insert(s).second) continue;
      result.recommendations.push_back(
          {s, static_cast<int>(result.recommendations.size()) + 1, "", ""});
    }
  }
  return result;
}

}  // namespace execopt
