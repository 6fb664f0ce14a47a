#include "execopt/memory_store.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "execopt/errors.hpp"
#include "execopt/hashing.hpp"
#include "execopt/kernels.hpp"

namespace execopt {

bool is_problem_type(std::string_view label) {
  return std::find(kProblemTypes.begin(), kProblemTypes.end(), label) != kProblemTypes.end();
}

std::string memory_entry_id(std::string_view description, std::string_view formulation,
                            std::string_view code) {
  std::string material;
  material.reserve(description.size() + formulation.size() + code.size() + 2);
  material.append(description).push_back('\0');
  material.append(formulation).push_back('\0');
  material.append(code);
  return "m" + sha256_hex(material).substr(0, 12);
}

void RetrievalConfig::validate() const {
  if (pool_size == 0) throw ConfigError("memory pool size must be positive");
  if (select_k == 0) throw ConfigError("number of selected examples must be positive");
  if (select_k > pool_size) {
    throw ConfigError("selected examples (" + std::to_string(select_k) +
                      ") exceed the pool size (" + std::to_string(pool_size) + ")");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
  if (!(similarity_threshold >= -1.0 && similarity_threshold <= 1.0)) {
    throw ConfigError("similarity threshold must lie in [-1, 1]");
  }
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  return kernels::cosine(a, b);
}

double diversity_score(double query_similarity, std::span<const double> sims_to_selected,
                       double lambda) {
  if (sims_to_selected.empty()) return query_similarity;
  double total = 0.0;
  for (double s : sims_to_selected) total += s;
  return query_similarity - lambda * (total / static_cast<double>(sims_to_selected.size()));
}

std::vector<MemoryEntry> diversity_select(const std::map<std::string, double>& query_sim,
                                          const std::vector<MemoryEntry>& pool,
                                          const RetrievalConfig& cfg) {
  const std::size_t n = pool.size();
  const std::size_t k = std::min(cfg.select_k, n);
  if (k == 0) return {};

  std::vector<std::vector<double>> rows;
  rows.reserve(n);
  for (const auto& e : pool) rows.push_back(e.embedding);
  const std::vector<double> pair = kernels::pairwise_cosine(rows);

  std::vector<double> qs(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = query_sim.find(pool[i].id);
    if (it == query_sim.end()) {
      throw SchemaViolation("no query similarity for memory entry " + pool[i].id);
    }
    qs[i] = it->second;
  }

  std::vector<std::size_t> selected;
  std::vector<bool> taken(n, false);
  std::vector<double> sims;
  while (selected.size() < k) {
    std::size_t best = n;
    double best_score = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      if (taken[c]) continue;
      sims.clear();
      for (std::size_t m : selected) sims.push_back(pair[c * n + m]);
      const double score = diversity_score(qs[c], sims, cfg.lambda);
      if (best == n || score > best_score ||
          (score == best_score && pool[c].id < pool[best].id)) {
        best = c;
        best_score = score;
      }
    }
    taken[best] = true;
    selected.push_back(best);
  }

  std::vector<MemoryEntry> out;
  out.reserve(k);
  for (std::size_t i : selected) out.push_back(pool[i]);
  return out;
}

MemoryStore::MemoryStore(std::size_t dimension, std::string embedder_id)
    : dimension_(dimension),
      embedder_id_(std::move(embedder_id)),
      entries_(std::make_shared<const std::vector<MemoryEntry>>()) {
  if (dimension_ == 0) throw ConfigError("embedding dimension must be positive");
}

MemoryStore::MemoryStore(MemoryStore&& other) noexcept
    : dimension_(other.dimension_),
      embedder_id_(std::move(other.embedder_id_)),
      entries_(other.snapshot()) {}

std::size_t MemoryStore::size() const { return snapshot()->size(); }

std::shared_ptr<const std::vector<MemoryEntry>> MemoryStore::snapshot() const {
  std::lock_guard lock(write_mu_);
  return entries_;
}

bool MemoryStore::insert(MemoryEntry entry) {
  if (entry.embedding.size() != dimension_) {
    throw DimensionMismatch("entry " + entry.id + " has embedding dimension " +
                            std::to_string(entry.embedding.size()) + ", store expects " +
                            std::to_string(dimension_));
  }
  if (!is_problem_type(entry.problem_type)) {
    throw SchemaViolation("unknown problem type '" + entry.problem_type + "'");
  }
  std::lock_guard lock(write_mu_);
  for (const auto& e : *entries_) {
    if (e.id == entry.id) return false;
  }
  auto next = std::make_shared<std::vector<MemoryEntry>>(*entries_);
  next->push_back(std::move(entry));
  entries_ = std::move(next);
  return true;
}

IngestReport MemoryStore::ingest(const std::vector<IngestItem>& items,
                                 EmbeddingProvider& embedder) {
  if (embedder.dimension() != dimension_) {
    throw DimensionMismatch("embedder produces dimension " + std::to_string(embedder.dimension()) +
                            ", store expects " + std::to_string(dimension_));
  }
  std::set<std::string> known;
  for (const auto& e : *snapshot()) known.insert(e.id);

  std::vector<MemoryEntry> fresh;
  std::vector<std::size_t> source_index;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& it = items[i];
    if (!is_problem_type(it.problem_type)) {
      throw SchemaViolation("entry " + std::to_string(i) + ": unknown problem type '" +
                            it.problem_type + "'");
    }
    MemoryEntry e;
    e.id = memory_entry_id(it.description, it.formulation, it.code);
    if (!known.insert(e.id).second) continue;
    e.description = it.description;
    e.formulation = it.formulation;
    e.code = it.code;
    e.problem_type = it.problem_type;
    fresh.push_back(std::move(e));
    source_index.push_back(i);
  }

  // Embed one at a time so a failure can name its entry.
  for (std::size_t f = 0; f < fresh.size(); ++f) {
    try {
      fresh[f].embedding = embedder.embed_one(fresh[f].description);
    } catch (const ProviderError& e) {
      throw ProviderError("embedding entry " + std::to_string(source_index[f]) + ": " + e.what());
    }
  }

  IngestReport report;
  for (auto& e : fresh) {
    if (insert(std::move(e))) ++report.added;
  }
  report.store_size = size();
  report.per_type = type_histogram();
  return report;
}

std::vector<ScoredEntry> MemoryStore::retrieve_pool(std::span<const double> query_embedding,
                                                    const RetrievalConfig& cfg) const {
  const auto entries = snapshot();
  if (entries->empty()) throw EmptyStore("memory store is empty");
  if (query_embedding.size() != dimension_) {
    throw DimensionMismatch("query has dimension " + std::to_string(query_embedding.size()) +
                            ", store expects " + std::to_string(dimension_));
  }
  std::vector<std::vector<double>> rows;
  rows.reserve(entries->size());
  for (const auto& e : *entries) rows.push_back(e.embedding);
  const std::vector<double> sims = kernels::cosine_scan(query_embedding, rows);

  std::vector<ScoredEntry> pool;
  for (std::size_t i = 0; i < entries->size(); ++i) {
    if (sims[i] >= cfg.similarity_threshold) pool.push_back({(*entries)[i], sims[i]});
  }
  std::sort(pool.begin(), pool.end(), [](const ScoredEntry& a, const ScoredEntry& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.entry.id < b.entry.id;
  });
  if (pool.size() > cfg.pool_size) pool.resize(cfg.pool_size);
  return pool;
}

std::vector<ScoredEntry> MemoryStore::retrieve(std::span<const double> query_embedding,
                                               const RetrievalConfig& cfg) const {
  const auto pool = retrieve_pool(query_embedding, cfg);
  std::map<std::string, double> query_sim;
  std::vector<MemoryEntry> entries;
  for (const auto& s : pool) {
    query_sim[s.entry.id] = s.similarity;
    entries.push_back(s.entry);
  }
  std::vector<ScoredEntry> out;
  for (auto& e : diversity_select(query_sim, entries, cfg)) {
    const double sim = query_sim.at(e.id);
    out.push_back({std::move(e), sim});
  }
  return out;
}

std::map<std::string, std::size_t> MemoryStore::type_histogram() const {
  std::map<std::string, std::size_t> h;
  for (const auto& e : *snapshot()) ++h[e.problem_type];
  return h;
}

void MemoryStore::save(const std::filesystem::path& path) const {
  std::string out;
  Json header = Json::object();
  header["format"] = "execopt-memory";
  header["version"] = 1;
  header["dimension"] = dimension_;
  header["embedder"] = embedder_id_;
  out += header.dump() + "\n";
  for (const auto& e : *snapshot()) {
    Json line = Json::object();
    line["id"] = e.id;
    line["problem_type"] = e.problem_type;
    line["description"] = e.description;
    line["formulation"] = e.formulation;
    line["code"] = e.code;
    line["embedding"] = e.embedding;
    out += line.dump() + "\n";
  }
  write_file(path, out);
}

MemoryStore MemoryStore::load(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw MalformedDocument(path.string() + ": empty store file");
  Json header;
  try {
    header = Json::parse(line);
  } catch (const Json::parse_error& e) {
    throw MalformedDocument(path.string() + ": bad header: " + e.what());
  }
  if (!header.is_object() || header.value("format", "") != "execopt-memory" ||
      !header.contains("dimension") || !header["dimension"].is_number_unsigned()) {
    throw MalformedDocument(path.string() + ": not a memory store file");
  }
  MemoryStore store(header["dimension"].get<std::size_t>(), header.value("embedder", ""));
  auto entries = std::make_shared<std::vector<MemoryEntry>>();
  std::set<std::string> ids;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    try {
      const Json j = Json::parse(line);
      MemoryEntry e;
      e.id = j.at("id").get<std::string>();
      e.problem_type = j.at("problem_type").get<std::string>();
      e.description = j.at("description").get<std::string>();
      e.formulation = j.at("formulation").get<std::string>();
      e.code = j.at("code").get<std::string>();
      e.embedding = j.at("embedding").get<std::vector<double>>();
      if (e.embedding.size() != store.dimension_) {
        throw DimensionMismatch(where + ": embedding dimension " +
                                std::to_string(e.embedding.size()));
      }
      if (!is_problem_type(e.problem_type)) {
        throw SchemaViolation(where + ": unknown problem type '" + e.problem_type + "'");
      }
      if (!ids.insert(e.id).second) throw SchemaViolation(where + ": duplicate id " + e.id);
      entries->push_back(std::move(e));
    } catch (const Json::exception& e) {
      throw MalformedDocument(where + ": " + e.what());
    }
  }
  store.entries_ = std::move(entries);
  return store;
}

}  // namespace execopt
