#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace execopt::oracle {

ConsensusExpected consensus(const std::vector<SolverRun>& runs, const ConsensusConfig& cfg) {
  const SolverStatus order[] = {SolverStatus::Optimal, SolverStatus::TimeLimit,
                                SolverStatus::Infeasible, SolverStatus::Unbounded,
                                SolverStatus::Error};
  auto effective = [](const SolverRun& r) {
    bool ok = r.status == SolverStatus::Optimal || r.status == SolverStatus::TimeLimit;
    return ok && !r.objective_value ? SolverStatus::Error : r.status;
  };
  ConsensusExpected e;
  int best = -1;
  for (SolverStatus s : order) {
    int c = 0;
    for (const auto& r : runs) c += effective(r) == s;
    if (c > best) {
      best = c;
      e.status = s;
    }
  }
  if (e.status != SolverStatus::Optimal && e.status != SolverStatus::TimeLimit) {
    e.valid_splits = 1;
    return e;
  }

  std::vector<const SolverRun*> ag;
  for (const auto& r : runs)
    if (effective(r) == e.status) ag.push_back(&r);
  std::sort(ag.begin(), ag.end(), [](auto* a, auto* b) {
    return std::make_pair(*a->objective_value, a->variant_name) <
           std::make_pair(*b->objective_value, b->variant_name);
  });
  const std::size_t n = ag.size();
  auto close = [&](double a, double b) {
    return std::abs(a - b) <= cfg.atol + cfg.rtol * std::abs(b) ||
           std::abs(b - a) <= cfg.atol + cfg.rtol * std::abs(a);
  };
  std::vector<std::vector<const SolverRun*>> groups;
  for (unsigned mask = 0; mask < (1u << (n - 1)); ++mask) {
    bool ok = true;
    for (std::size_t i = 1; i < n && ok; ++i) {
      const bool cut = (mask >> (i - 1)) & 1u;
      ok = cut != close(*ag[i]->objective_value, *ag[i - 1]->objective_value);
    }
    if (!ok) continue;
    ++e.valid_splits;
    groups.assign(1, {ag[0]});
    for (std::size_t i = 1; i < n; ++i) {
      if ((mask >> (i - 1)) & 1u) groups.emplace_back();
      groups.back().push_back(ag[i]);
    }
  }
  e.clusters = static_cast<int>(groups.size());
  auto med = [](const std::vector<const SolverRun*>& g) {
    return *g[(g.size() - 1) / 2]->objective_value;
  };
  const std::vector<const SolverRun*>* pick = nullptr;
  for (const auto& g : groups) {
    if (!pick || g.size() > pick->size() ||
        (g.size() == pick->size() &&
         (cfg.direction == Direction::Minimize ? med(g) < med(*pick) : med(g) > med(*pick)))) {
      pick = &g;
    }
  }
  e.agreement = static_cast<int>(pick->size());
  e.objective = med(*pick);
  const SolverRun* who = nullptr;
  for (const auto* r : *pick) {
    if (*r->objective_value != *e.objective) continue;
    if (!who || std::make_pair(r->solve_time, r->variant_name) <
                    std::make_pair(who->solve_time, who->variant_name)) {
      who = r;
    }
  }
  e.achiever = who->variant_name;
  return e;
}

double naive_cos(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<std::string> diversity_select(const std::map<std::string, double>& qs,
                                          const std::vector<MemoryEntry>& pool, std::size_t k,
                                          double lambda) {
  std::vector<std::string> chosen;
  std::vector<const MemoryEntry*> picked;
  while (chosen.size() < std::min(k, pool.size())) {
    const MemoryEntry* best = nullptr;
    double best_score = -1e300;
    for (const auto& c : pool) {
      if (std::find(chosen.begin(), chosen.end(), c.id) != chosen.end()) continue;
      double score = qs.at(c.id);
      if (!picked.empty()) {
        double s = 0;
        for (const auto* m : picked) s += naive_cos(c.embedding, m->embedding);
        score -= lambda * s / static_cast<double>(picked.size());
      }
      if (best == nullptr || score > best_score || (score == best_score && c.id < best->id)) {
        best = &c;
        best_score = score;
      }
    }
    chosen.push_back(best->id);
    picked.push_back(best);
  }
  return chosen;
}

}  // namespace execopt::oracle
