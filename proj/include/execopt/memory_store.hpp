#pragma once

// Memory of solved examples: (description, formulation, code) triplets with
// an embedding of the description, and the relevance/diversity retrieval
// used to pick few-shot examples.

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "execopt/providers.hpp"

namespace execopt {

inline constexpr std::array<std::string_view, 15> kProblemTypes = {
    "Knapsack",          "Assignment",           "Scheduling",      "Transportation",
    "Facility Location", "Network Flow",         "TSP",             "Vehicle Routing",
    "Resource Allocation", "Production Planning", "Inventory Management", "Cutting Stock",
    "Bin Packing",       "Linear Programming",   "Miscellaneous"};

bool is_problem_type(std::string_view label);

struct MemoryEntry {
  std::string id;
  std::string description;
  std::string formulation;
  std::string code;
  std::string problem_type;
  Embedding embedding;

  bool operator==(const MemoryEntry&) const = default;
};

// Content-derived id, so the same triplet always gets the same id.
std::string memory_entry_id(std::string_view description, std::string_view formulation,
                            std::string_view code);

struct RetrievalConfig {
  std::size_t pool_size = 9;
  std::size_t select_k = 3;
  double lambda = 0.5;
  double similarity_threshold = 0.6;

  void validate() const;  // throws ConfigError
};

// Throws DimensionMismatch or ZeroVector.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct ScoredEntry {
  MemoryEntry entry;
  double similarity = 0.0;
};

struct IngestItem {
  std::string description;
  std::string formulation;
  std::string code;
  std::string problem_type;
};

struct IngestReport {
  std::size_t added = 0;
  std::size_t store_size = 0;
  std::map<std::string, std::size_t> per_type;  // counts over the whole store
};

// Greedy relevance/diversity selection. `query_sim` maps entry id to its
// similarity with the query. Pairwise similarities come from the stored
// embeddings.
std::vector<MemoryEntry> diversity_select(const std::map<std::string, double>& query_sim,
                                          const std::vector<MemoryEntry>& pool,
                                          const RetrievalConfig& cfg);

// One selection step, exposed for testing: score(c) = sim(D, c) − λ · mean
// over `selected` of sim(c, m). With nothing selected the score is sim(D, c).
double diversity_score(double query_similarity, std::span<const double> sims_to_selected,
                       double lambda);

class MemoryStore {
 public:
  MemoryStore(std::size_t dimension, std::string embedder_id);
  MemoryStore(MemoryStore&& other) noexcept;
  MemoryStore& operator=(MemoryStore&&) = delete;

  std::size_t dimension() const { return dimension_; }
  const std::string& embedder_id() const { return embedder_id_; }
  std::size_t size() const;

  // Point-in-time view; later ingests do not affect it.
  std::shared_ptr<const std::vector<MemoryEntry>> snapshot() const;

  // Embeds and adds new triplets; duplicates by content are skipped.
  // ProviderError is rethrown with the failing entry index in the message.
  IngestReport ingest(const std::vector<IngestItem>& items, EmbeddingProvider& embedder);

  // Adds an already-embedded entry. Returns false for a duplicate id.
  bool insert(MemoryEntry entry);

  // Entries with similarity ≥ threshold, descending, ties by ascending id,
  // truncated to pool_size. Throws EmptyStore.
  std::vector<ScoredEntry> retrieve_pool(std::span<const double> query_embedding,
                                         const RetrievalConfig& cfg) const;

  // retrieve_pool followed by diversity_select.
  std::vector<ScoredEntry> retrieve(std::span<const double> query_embedding,
                                    const RetrievalConfig& cfg) const;

  std::map<std::string, std::size_t> type_histogram() const;

  // NDJSON: a header line, then one entry per line.
  void save(const std::filesystem::path& path) const;
  static MemoryStore load(const std::filesystem::path& path);

 private:
  std::size_t dimension_;
  std::string embedder_id_;
  mutable std::mutex write_mu_;
  std::shared_ptr<const std::vector<MemoryEntry>> entries_;
};

}  // namespace execopt
