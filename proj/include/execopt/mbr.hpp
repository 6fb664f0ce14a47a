#pragma once

// Component-wise minimum-Bayes-risk selection over n extraction candidates,
// followed by a judge re-ranking of the top q.

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "execopt/decision_model.hpp"
#include "execopt/providers.hpp"

namespace execopt {

inline constexpr std::array<std::string_view, 4> kComponentTypes = {
    "constraints", "decision_variables", "objective", "inputs"};

struct ExtractionCandidate {
  int id = 0;  // 1-based
  DecisionProcess process;
  std::map<std::string, std::string> component_texts;
  std::map<std::string, Embedding> component_embeddings;
  Embedding full_embedding;  // whole extraction, for consistency metrics
};

// Canonical JSON fragment of each weighted component.
std::map<std::string, std::string> component_texts(const DecisionProcess& p);

ExtractionCandidate make_candidate(int id, DecisionProcess process);

// Fills component and full embeddings with one batched call.
void embed_candidates(std::vector<ExtractionCandidate>& candidates, EmbeddingProvider& embedder);

struct MbrConfig {
  int num_candidates = 5;
  int top_q = 3;
  std::map<std::string, double> weights = {
      {"constraints", 0.6}, {"decision_variables", 0.2}, {"objective", 0.1}, {"inputs", 0.1}};

  // Throws WeightMismatch for missing/extra component weights or a sum off
  // 1 by more than 1e-12, ConfigError for bad n or q.
  void validate() const;
};

// S(c^i_j): mean cosine between candidate i's component j and every other
// candidate's. Throws MissingEmbedding.
double component_utility(const std::vector<ExtractionCandidate>& candidates, int id,
                         std::string_view component);

// U(i) = Σ_j w_j S(c^i_j).
double candidate_utility(const std::vector<ExtractionCandidate>& candidates, int id,
                         const MbrConfig& cfg);

struct CandidateScore {
  int id = 0;
  double utility = 0.0;
  std::map<std::string, double> components;
};

// Scores for every candidate, in input order.
std::vector<CandidateScore> score_candidates(const std::vector<ExtractionCandidate>& candidates,
                                             const MbrConfig& cfg);

// The q highest-utility candidates, descending, ties by ascending id.
std::vector<ExtractionCandidate> select_top_q(const std::vector<ExtractionCandidate>& candidates,
                                              const MbrConfig& cfg);

enum class Confidence { High, Medium, Low };
std::string_view to_string(Confidence c);

struct JudgeVerdict {
  std::string disagreement_analysis;
  int best_candidate_id = 0;
  Confidence confidence = Confidence::Low;
  std::string reasoning;
};

Json judge_verdict_to_json(const JudgeVerdict& v);
// Parses the judge reply; throws ContractViolation when the reply is not
// exactly the expected JSON object or names an id outside `allowed_ids`.
JudgeVerdict parse_judge_verdict(std::string_view reply, const std::vector<int>& allowed_ids);

std::string render_judge_prompt(std::string_view problem,
                                const std::vector<ExtractionCandidate>& top);

struct JudgeOutcome {
  ExtractionCandidate chosen;
  std::optional<JudgeVerdict> verdict;
  bool judge_called = false;
  bool fallback = false;
  std::vector<std::string> diagnostics;  // one line per contract problem
};

// `top` must be ordered by descending utility. With one candidate the judge
// is not consulted. A malformed or out-of-set reply is retried once; after
// that, or if the judge is unavailable, the first (highest-U) candidate is
// returned and the reason recorded.
JudgeOutcome judge_rerank(const std::vector<ExtractionCandidate>& top, std::string_view problem,
                          LlmProvider* judge, const std::string& run_id = "");

struct ConsistencyMetrics {
  double consistency = 0.0;  // mean pairwise cosine of full extractions
  double stability = 0.0;    // population std of those cosines
};

ConsistencyMetrics consistency_metrics(const std::vector<ExtractionCandidate>& candidates);

}  // namespace execopt
