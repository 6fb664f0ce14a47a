#include "execopt/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "execopt/errors.hpp"

namespace execopt {

void ConsensusConfig::validate() const {
  if (num_variants < 1) throw ConfigError("number of optimizer variants must be at least 1");
  if (!(rtol >= 0.0) || !(atol >= 0.0)) throw ConfigError("rtol and atol must be non-negative");
}

bool objective_similar(double a, double b, const ConsensusConfig& cfg) {
  return std::fabs(a - b) <= cfg.atol + cfg.rtol * std::fabs(b);
}

bool objective_similar_symmetric(double a, double b, const ConsensusConfig& cfg) {
  return objective_similar(a, b, cfg) || objective_similar(b, a, cfg);
}

SolverStatus status_consensus(const std::vector<SolverRun>& runs) {
  std::map<SolverStatus, int> counts;
  for (const auto& r : runs) ++counts[r.status];
  SolverStatus best = SolverStatus::Error;
  int best_count = -1;
  for (SolverStatus s : kAllStatuses) {
    const int c = counts.count(s) ? counts[s] : 0;
    if (c > best_count) {  // strict: earlier statuses win ties
      best = s;
      best_count = c;
    }
  }
  return best;
}

std::vector<ObjectiveCluster> cluster_objectives(std::vector<std::pair<std::string, double>> values,
                                                 const ConsensusConfig& cfg) {
  std::sort(values.begin(), values.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    return a.first < b.first;
  });
  std::vector<ObjectiveCluster> clusters;
  for (auto& v : values) {
    if (!clusters.empty() &&
        objective_similar_symmetric(v.second, clusters.back().members.back().second, cfg)) {
      clusters.back().members.push_back(std::move(v));
    } else {
      clusters.push_back(ObjectiveCluster{{std::move(v)}});
    }
  }
  return clusters;
}

namespace {

double lower_median(const ObjectiveCluster& c) {
  return c.members[(c.members.size() - 1) / 2].second;
}

}  // namespace

ConsensusResult consensus(const std::vector<SolverRun>& input, const ConsensusConfig& cfg,
                          const std::vector<std::string>& expected_variants) {
  std::vector<SolverRun> runs = input;
  for (auto& r : runs) {
    if ((r.status == SolverStatus::Optimal || r.status == SolverStatus::TimeLimit) &&
        (!r.objective_value || !std::isfinite(*r.objective_value))) {
      r.status = SolverStatus::Error;
    }
  }
  std::set<std::string> present;
  for (const auto& r : runs) present.insert(r.variant_name);
  for (const auto& name : expected_variants) {
    if (present.insert(name).second) {
      SolverRun missing;
      missing.variant_name = name;
      missing.status = SolverStatus::Error;
      runs.push_back(std::move(missing));
    }
  }
  std::sort(runs.begin(), runs.end(), [](const SolverRun& a, const SolverRun& b) {
    if (a.variant_name != b.variant_name) return a.variant_name < b.variant_name;
    if (a.solve_time != b.solve_time) return a.solve_time < b.solve_time;
    return a.objective_value < b.objective_value;
  });

  ConsensusResult out;
  out.num_variants = static_cast<int>(runs.size());
  for (const auto& r : runs) {
    ++out.status_distribution[r.status];
    out.variant_results.push_back(
        {r.variant_name, r.solver_name, r.status, r.objective_value, r.solve_time});
    if (!r.solver_name.empty()) out.solvers_used.push_back(r.solver_name);
    if (r.status == SolverStatus::Error) out.failed_variants.push_back(r.variant_name);
  }
  out.num_failed = static_cast<int>(out.failed_variants.size());
  out.num_successful = out.num_variants - out.num_failed;
  if (runs.empty()) return out;

  out.status = status_consensus(runs);
  std::vector<const SolverRun*> agreeing;
  for (const auto& r : runs) {
    if (r.status == out.status) agreeing.push_back(&r);
  }
  out.solver_agreement = static_cast<int>(agreeing.size());

  if (out.status != SolverStatus::Optimal && out.status != SolverStatus::TimeLimit) {
    for (const auto* r : agreeing) {
      if (!r->solver_name.empty()) out.consensus_solvers.push_back(r->solver_name);
    }
    return out;
  }

  std::vector<std::pair<std::string, double>> values;
  for (const auto* r : agreeing) values.emplace_back(r->variant_name, *r->objective_value);
  const auto clusters = cluster_objectives(values, cfg);
  out.num_unique_objectives = static_cast<int>(clusters.size());

  const ObjectiveCluster* chosen = &clusters.front();
  for (const auto& c : clusters) {
    if (c.members.size() > chosen->members.size()) {
      chosen = &c;
    } else if (c.members.size() == chosen->members.size()) {
      const double m = lower_median(c), cm = lower_median(*chosen);
      const bool prefer = cfg.direction == Direction::Minimize ? m < cm : m > cm;
      if (prefer) chosen = &c;
    }
  }
  out.objective_agreement = static_cast<int>(chosen->members.size());
  out.objective_agreement_ratio =
      static_cast<double>(out.objective_agreement) / static_cast<double>(out.solver_agreement);

  const double median = lower_median(*chosen);
  std::set<std::string> members;
  for (const auto& [name, value] : chosen->members) members.insert(name);

  const SolverRun* achiever = nullptr;
  for (const auto* r : agreeing) {
    if (!members.count(r->variant_name)) continue;
    if (!r->solver_name.empty()) out.consensus_solvers.push_back(r->solver_name);
    if (*r->objective_value != median) continue;
    if (achiever == nullptr || r->solve_time < achiever->solve_time) achiever = r;
  }
  // The lower median is a member value, so an achiever always exists.
  out.objective_value = median;
  out.variables = achiever->variables;
  out.achieving_variant = achiever->variant_name;
  return out;
}

Json consensus_to_json(const ConsensusResult& r) {
  Json vars = Json::object();
  for (const auto& [k, v] : r.variables) vars[k] = v;
  Json doc = Json::object();
  doc["optimal_variables"] = vars;
  doc["optimal_objective_value"] = number_or_null(r.objective_value);
  doc["status"] = to_string(r.status);

  Json info = Json::object();
  info["ensemble_size"] = r.num_variants;
  info["solvers_used"] = r.solvers_used;
  info["consensus_solvers"] = r.consensus_solvers;
  doc["solver_info"] = info;

  Json dist = Json::object();
  for (SolverStatus s : kAllStatuses) {
    if (auto it = r.status_distribution.find(s); it != r.status_distribution.end() && it->second > 0) {
      dist[std::string(to_string(s))] = it->second;
    }
  }
  Json ci = Json::object();
  ci["num_variants"] = r.num_variants;
  ci["num_successful"] = r.num_successful;
  ci["num_failed"] = r.num_failed;
  ci["status_distribution"] = dist;
  ci["solver_agreement"] = r.solver_agreement;
  ci["objective_agreement"] = r.objective_agreement;
  ci["objective_agreement_ratio"] = r.objective_agreement_ratio;
  ci["num_unique_objectives"] = r.num_unique_objectives;
  ci["failed_variants"] = r.failed_variants;
  doc["consensus_info"] = ci;

  Json variants = Json::array();
  for (const auto& v : r.variant_results) {
    Json j = Json::object();
    j["variant_name"] = v.variant_name;
    j["solver"] = v.solver;
    j["status"] = to_string(v.status);
    j["objective_value"] = number_or_null(v.objective_value);
    j["solve_time"] = v.solve_time;
    variants.push_back(std::move(j));
  }
  doc["variant_results"] = variants;
  return doc;
}

}  // namespace execopt
