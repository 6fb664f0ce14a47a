#include "execopt/mbr.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "execopt/errors.hpp"
#include "execopt/kernels.hpp"

namespace execopt {

std::map<std::string, std::string> component_texts(const DecisionProcess& p) {
  const Json doc = decision_process_to_json(p);
  return {{"constraints", doc["constraints"].dump()},
          {"decision_variables", doc["decision_variables"].dump()},
          {"objective", doc["objective_function"].dump()},
          {"inputs", doc["inputs"].dump()}};
}

ExtractionCandidate make_candidate(int id, DecisionProcess process) {
  ExtractionCandidate c;
  c.id = id;
  c.component_texts = component_texts(process);
  c.process = std::move(process);
  return c;
}

void embed_candidates(std::vector<ExtractionCandidate>& candidates, EmbeddingProvider& embedder) {
  std::vector<std::string> texts;
  for (const auto& c : candidates) {
    for (auto type : kComponentTypes) texts.push_back(c.component_texts.at(std::string(type)));
    texts.push_back(serialize_decision_process(c.process));
  }
  if (texts.empty()) return;
  const auto vectors = embedder.embed(texts);
  if (vectors.size() != texts.size()) {
    throw ContractViolation("embedder returned " + std::to_string(vectors.size()) +
                            " vectors for " + std::to_string(texts.size()) + " texts");
  }
  std::size_t k = 0;
  for (auto& c : candidates) {
    for (auto type : kComponentTypes) c.component_embeddings[std::string(type)] = vectors[k++];
    c.full_embedding = vectors[k++];
  }
}

void MbrConfig::validate() const {
  if (num_candidates < 2) throw ConfigError("number of candidates must be at least 2");
  if (top_q < 1 || top_q > num_candidates) {
    throw ConfigError("top-q must lie in [1, number of candidates]");
  }
  double total = 0.0;
  for (auto type : kComponentTypes) {
    auto it = weights.find(std::string(type));
    if (it == weights.end()) throw WeightMismatch("no weight for component '" + std::string(type) + "'");
    if (!(it->second >= 0.0)) throw WeightMismatch("weight of '" + std::string(type) + "' is negative");
    total += it->second;
  }
  if (weights.size() != kComponentTypes.size()) {
    throw WeightMismatch("weights name a component type outside {constraints, "
                         "decision_variables, objective, inputs}");
  }
  if (std::fabs(total - 1.0) > 1e-12) {
    throw WeightMismatch("component weights sum to " + std::to_string(total) + ", not 1");
  }
}

namespace {

const Embedding& component_embedding(const ExtractionCandidate& c, std::string_view component) {
  auto it = c.component_embeddings.find(std::string(component));
  if (it == c.component_embeddings.end() || it->second.empty()) {
    throw MissingEmbedding("candidate " + std::to_string(c.id) + " has no embedding for '" +
                           std::string(component) + "'");
  }
  return it->second;
}

std::size_t position_of(const std::vector<ExtractionCandidate>& candidates, int id) {
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].id == id) return i;
  }
  throw SchemaViolation("no candidate with id " + std::to_string(id));
}

}  // namespace

double component_utility(const std::vector<ExtractionCandidate>& candidates, int id,
                         std::string_view component) {
  if (candidates.size() < 2) throw ConfigError("component utility needs at least 2 candidates");
  const std::size_t i = position_of(candidates, id);
  const Embedding& mine = component_embedding(candidates[i], component);
  double total = 0.0;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if (k == i) continue;
    total += kernels::cosine(component_embedding(candidates[k], component), mine);
  }
  return total / static_cast<double>(candidates.size() - 1);
}

double candidate_utility(const std::vector<ExtractionCandidate>& candidates, int id,
                         const MbrConfig& cfg) {
  double u = 0.0;
  for (auto type : kComponentTypes) {
    auto it = cfg.weights.find(std::string(type));
    if (it == cfg.weights.end()) {
      throw WeightMismatch("no weight for component '" + std::string(type) + "'");
    }
    u += it->second * component_utility(candidates, id, type);
  }
  return u;
}

std::vector<CandidateScore> score_candidates(const std::vector<ExtractionCandidate>& candidates,
                                             const MbrConfig& cfg) {
  std::vector<CandidateScore> scores;
  scores.reserve(candidates.size());
  for (const auto& c : candidates) {
    CandidateScore s;
    s.id = c.id;
    for (auto type : kComponentTypes) {
      s.components[std::string(type)] = component_utility(candidates, c.id, type);
    }
    for (auto type : kComponentTypes) {
      auto it = cfg.weights.find(std::string(type));
      if (it == cfg.weights.end()) {
        throw WeightMismatch("no weight for component '" + std::string(type) + "'");
      }
      s.utility += it->second * s.components[std::string(type)];
    }
    scores.push_back(std::move(s));
  }
  return scores;
}

std::vector<ExtractionCandidate> select_top_q(const std::vector<ExtractionCandidate>& candidates,
                                              const MbrConfig& cfg) {
  auto scores = score_candidates(candidates, cfg);
  std::sort(scores.begin(), scores.end(), [](const CandidateScore& a, const CandidateScore& b) {
    if (a.utility != b.utility) return a.utility > b.utility;
    return a.id < b.id;
  });
  const std::size_t q = std::min<std::size_t>(static_cast<std::size_t>(std::max(cfg.top_q, 0)),
                                              scores.size());
  std::vector<ExtractionCandidate> out;
  out.reserve(q);
  for (std::size_t i = 0; i < q; ++i) out.push_back(candidates[position_of(candidates, scores[i].id)]);
  return out;
}

std::string_view to_string(Confidence c) {
  switch (c) {
    case Confidence::High: return "high";
    case Confidence::Medium: return "medium";
    case Confidence::Low: return "low";
  }
  return "low";
}

Json judge_verdict_to_json(const JudgeVerdict& v) {
  Json j = Json::object();
  j["disagreement_analysis"] = v.disagreement_analysis;
  j["best_candidate_id"] = v.best_candidate_id;
  j["confidence"] = to_string(v.confidence);
  j["reasoning"] = v.reasoning;
  return j;
}

JudgeVerdict parse_judge_verdict(std::string_view reply, const std::vector<int>& allowed_ids) {
  Json j;
  try {
    j = Json::parse(reply);
  } catch (const Json::parse_error& e) {
    throw ContractViolation(std::string("judge reply is not a single JSON object: ") + e.what());
  }
  if (!j.is_object()) throw ContractViolation("judge reply is not a JSON object");
  auto text_field = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_string()) {
      throw ContractViolation(std::string("judge reply lacks string field '") + key + "'");
    }
    return j[key].get<std::string>();
  };
  JudgeVerdict v;
  v.disagreement_analysis = text_field("disagreement_analysis");
  v.reasoning = text_field("reasoning");
  const std::string confidence = text_field("confidence");
  if (confidence == "high") v.confidence = Confidence::High;
  else if (confidence == "medium") v.confidence = Confidence::Medium;
  else if (confidence == "low") v.confidence = Confidence::Low;
  else throw ContractViolation("judge confidence must be high, medium or low, got '" + confidence + "'");
  if (!j.contains("best_candidate_id") || !j["best_candidate_id"].is_number_integer()) {
    throw ContractViolation("judge reply lacks integer field 'best_candidate_id'");
  }
  v.best_candidate_id = j["best_candidate_id"].get<int>();
  if (std::find(allowed_ids.begin(), allowed_ids.end(), v.best_candidate_id) == allowed_ids.end()) {
    throw ContractViolation("JudgeContractViolation: best_candidate_id " +
                            std::to_string(v.best_candidate_id) + " is not a provided candidate");
  }
  return v;
}

std::string render_judge_prompt(std::string_view problem,
                                const std::vector<ExtractionCandidate>& top) {
  Json candidates = Json::array();
  for (const auto& c : top) {
    Json entry = Json::object();
    entry["id"] = c.id;
    entry["formulation"] = decision_process_to_json(c.process);
    candidates.push_back(std::move(entry));
  }
  std::string prompt;
  prompt +=
      "Act as an adjudicator selecting the single best Operations Research formulation from a "
      "small set of top candidates with subtle logical differences.\n\n";
  prompt += "Inputs:\n- Problem description: ";
  prompt += problem;
  prompt += "\n- Candidate formulations (JSON): ";
  prompt += candidates.dump(2);
  prompt +=
      "\n\nDecision protocol:\n"
      "1. Identify functional differences (missing or extra constraints, inequality or objective "
      "direction changes, variable type mismatches).\n"
      "2. Verify against the problem text:\n"
      "   - Penalize unsupported or omitted constraints.\n"
      "   - Disqualify candidates using prose instead of symbolic math.\n"
      "   - Prefer balance equations over redundant static bounds when they implicitly enforce "
      "limits.\n"
      "3. Select the mathematically correct, non-redundant formulation; prefer fewer, more general "
      "constraints when multiple candidates are valid.\n\n"
      "Output:\nReturn ONLY a JSON object in the following format:\n\n"
      "{\n"
      "  \"disagreement_analysis\": \"Brief summary of key conflicts.\",\n"
      "  \"best_candidate_id\": 1,\n"
      "  \"confidence\": \"high|medium|low\",\n"
      "  \"reasoning\": \"Concise justification referencing correctness and avoidance of "
      "redundancy.\"\n"
      "}\n\n"
      "Constraints:\n- best_candidate_id must match a provided candidate ID.\n"
      "- No text outside the JSON object.\n";
  return prompt;
}

JudgeOutcome judge_rerank(const std::vector<ExtractionCandidate>& top, std::string_view problem,
                          LlmProvider* judge, const std::string& run_id) {
  if (top.empty()) throw ConfigError("judge re-ranking needs at least one candidate");
  JudgeOutcome out;
  out.chosen = top.front();
  if (top.size() == 1) return out;

  if (judge == nullptr) {
    out.fallback = true;
    out.diagnostics.push_back("judge unavailable; kept highest-utility candidate " +
                              std::to_string(top.front().id));
    return out;
  }

  std::vector<int> ids;
  for (const auto& c : top) ids.push_back(c.id);
  ProviderRequest req;
  req.kind = RequestKind::Judge;
  req.prompt = render_judge_prompt(problem, top);
  req.run_id = run_id;

  for (int attempt = 0; attempt < 2; ++attempt) {
    req.sample = attempt;
    out.judge_called = true;
    try {
      const std::string reply = judge->complete(req);
      JudgeVerdict v = parse_judge_verdict(reply, ids);
      for (const auto& c : top) {
        if (c.id == v.best_candidate_id) out.chosen = c;
      }
      out.verdict = std::move(v);
      return out;
    } catch (const ContractViolation& e) {
      out.diagnostics.push_back("attempt " + std::to_string(attempt + 1) + ": " + e.what());
    } catch (const ProviderError& e) {
      out.diagnostics.push_back("attempt " + std::to_string(attempt + 1) + ": judge unavailable: " +
                                e.what());
      break;
    }
  }
  out.fallback = true;
  out.chosen = top.front();
  out.diagnostics.push_back("fell back to highest-utility candidate " +
                            std::to_string(top.front().id));
  return out;
}

ConsistencyMetrics consistency_metrics(const std::vector<ExtractionCandidate>& candidates) {
  const std::size_t n = candidates.size();
  if (n < 2) throw ConfigError("consistency metrics need at least 2 candidates");
  std::vector<std::vector<double>> rows;
  for (const auto& c : candidates) {
    if (c.full_embedding.empty()) {
      throw MissingEmbedding("candidate " + std::to_string(c.id) + " has no full embedding");
    }
    rows.push_back(c.full_embedding);
  }
  const auto m = kernels::pairwise_cosine(rows);
  std::vector<double> sims;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) sims.push_back(m[i * n + j]);
  }
  double mean = 0.0;
  for (double s : sims) mean += s;
  mean /= static_cast<double>(sims.size());
  double var = 0.0;
  for (double s : sims) var += (s - mean) * (s - mean);
  var /= static_cast<double>(sims.size());
  return {mean, std::sqrt(var)};
}

}  // namespace execopt
