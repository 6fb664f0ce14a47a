#pragma once

// Ranked solver backends for a formulation, proposed by a language model and
// restricted to what the deployment actually has.
//
// Reply schema (defined here; see docs/artifacts.md):
//   {"recommendations": [{"solver": "...", "rank": 1,
//                         "rationale": "...", "setup_notes": "..."}]}

#include <string>
#include <string_view>
#include <vector>

#include "execopt/decision_model.hpp"
#include "execopt/providers.hpp"

namespace execopt {

inline constexpr std::string_view kToySolver = "toy-bruteforce";

struct SolverRecommendation {
  std::string solver;
  int rank = 1;
  std::string rationale;
  std::string setup_notes;
  bool operator==(const SolverRecommendation&) const = default;
};

struct RecommendationResult {
  std::vector<SolverRecommendation> recommendations;
  std::vector<std::string> warnings;
  bool fallback = false;  // provider output unusable, available order used
};

std::string render_recommend_prompt(const DecisionProcess& p,
                                    const std::vector<std::string>& available);

// Every returned solver is in `available`; ranks are 1..m. Unknown solvers
// are dropped with a warning; if nothing usable remains the available list
// is returned in order. ProviderError propagates.
RecommendationResult recommend(const DecisionProcess& p, const std::vector<std::string>& available,
                               LlmProvider& llm, const std::string& run_id = "");

Json recommendations_to_json(const std::vector<SolverRecommendation>& recs);
std::vector<SolverRecommendation> recommendations_from_json(const Json& doc);

}  // namespace execopt
