#pragma once

// Reference implementations written separately from the library, shared by
// the unit tests and the acceptance binary.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "execopt/consensus.hpp"
#include "execopt/memory_store.hpp"

namespace execopt::oracle {

struct ConsensusExpected {
  SolverStatus status = SolverStatus::Error;
  std::optional<double> objective;
  std::string achiever;
  int clusters = 0;
  int agreement = 0;
  int valid_splits = 0;  // contiguous splits obeying the sweep rule; must be 1
};

// Explicit counting, every contiguous split of the sorted values, and a
// linear scan for the winning cluster and achiever.
ConsensusExpected consensus(const std::vector<SolverRun>& runs, const ConsensusConfig& cfg);

// Recomputes every remaining candidate's score at every step.
std::vector<std::string> diversity_select(const std::map<std::string, double>& query_sim,
                                          const std::vector<MemoryEntry>& pool, std::size_t k,
                                          double lambda);

double naive_cos(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace execopt::oracle
