#include <cstdio>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "execopt/errors.hpp"
#include "execopt/eval_harness.hpp"
#include "execopt/hashing.hpp"
#include "execopt/memory_store.hpp"
#include "execopt/mock_providers.hpp"
#include "execopt/http_providers.hpp"
#include "execopt/pipeline.hpp"
#include "execopt/run_config.hpp"

using namespace execopt;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitStage = 3;
constexpr int kExitConfig = 4;

RunConfig config_from(const std::string& path) {
  RunConfig cfg = path.empty() ? RunConfig{} : load_run_config(fs::absolute(path));
  apply_env_overrides(cfg);
  return cfg;
}

std::shared_ptr<EmbeddingProvider> embedder_for(const RunConfig& cfg) {
  if (cfg.embedder.type == "hashing") {
    return std::make_shared<HashingEmbedder>(cfg.embedder.dimension, cfg.seed);
  }
  const char* key = std::getenv(cfg.embedder.api_key_env.c_str());
  return std::make_shared<OpenAiEmbedder>(
      HttpSettings{cfg.embedder.endpoint, cfg.embedder.model, key ? key : ""}, cfg.embedder.dimension);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

int run_solve(const std::string& config, const std::string& problem_file, const std::string& run_dir,
              bool resume) {
  RunConfig cfg = config_from(config);
  if (!run_dir.empty()) cfg.run_dir = fs::absolute(run_dir);
  cfg.validate();
  const std::string problem = read_file(problem_file);
  if (!resume) fs::remove_all(cfg.run_dir);
  ProviderSet providers = make_providers(cfg);
  const SolveResult r = solve(problem, cfg, providers, SolveOptions{resume});
  std::cout << "run " << r.run_id << " -> " << cfg.run_dir.string() << "\n";
  if (!r.completed) {
    std::cout << "stage '" << r.failed_stage << "' failed: " << r.error_code << ": " << r.error << "\n";
    return r.exit_code();
  }
  std::cout << "selected candidate " << r.selected_candidate << "\n";
  std::cout << "status " << to_string(r.consensus->status) << "\n";
  if (r.consensus->objective_value) std::cout << "objective " << fmt(*r.consensus->objective_value) << "\n";
  std::cout << "validation " << (r.validation_passed() ? "passed" : "failed") << " after "
            << r.validation->history.size() << " iteration(s)\n";
  return r.exit_code();
}

int run_evaluate(const std::string& config, const std::string& suite, const std::string& run_dir,
                 const std::string& report) {
  RunConfig cfg = config_from(config);
  if (!run_dir.empty()) cfg.run_dir = fs::absolute(run_dir);
  cfg.validate();
  const auto instances = load_suite(suite);
  const SuiteReport r = run_suite(instances, make_suite_pipeline(cfg), cfg.batch_size);
  std::cout << suite_report_text(r);
  if (!report.empty()) write_file(report, suite_report_to_json(r).dump(2) + "\n");
  return kExitOk;
}

std::vector<IngestItem> read_corpus(const std::string& path) {
  std::vector<IngestItem> items;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const Json j = Json::parse(line);
      items.push_back({j.at("description").get<std::string>(), j.at("formulation").get<std::string>(),
                       j.at("code").get<std::string>(), j.at("problem_type").get<std::string>()});
    } catch (const Json::exception& e) {
      throw MalformedDocument(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return items;
}

int run_ingest(const std::string& config, const std::string& store_path, const std::string& corpus) {
  const RunConfig cfg = config_from(config);
  auto embedder = embedder_for(cfg);
  MemoryStore store = fs::exists(store_path) ? MemoryStore::load(store_path)
                                             : MemoryStore(embedder->dimension(), embedder->id());
  if (store.embedder_id() != embedder->id()) {
    throw ConfigError("store was built with embedder '" + store.embedder_id() + "', not '" +
                      embedder->id() + "'");
  }
  const IngestReport r = store.ingest(read_corpus(corpus), *embedder);
  store.save(store_path);
  std::cout << "added " << r.added << ", store size " << r.store_size << "\n";
  for (const auto& [type, n] : r.per_type) std::cout << "  " << type << ": " << n << "\n";
  return kExitOk;
}

int run_retrieve(const std::string& config, const std::string& store_path, std::string query,
                 const std::string& query_file, RetrievalConfig rc) {
  const RunConfig cfg = config_from(config);
  if (!query_file.empty()) query = read_file(query_file);
  if (query.empty()) throw ConfigError("give --query or --query-file");
  rc.validate();
  auto embedder = embedder_for(cfg);
  const MemoryStore store = MemoryStore::load(store_path);
  if (store.embedder_id() != embedder->id()) {
    throw ConfigError("store was built with embedder '" + store.embedder_id() + "', not '" +
                      embedder->id() + "'");
  }
  const auto picked = store.retrieve(embedder->embed_one(query), rc);
  std::cout << picked.size() << " example(s)\n";
  for (const auto& s : picked) {
    char sim[32];
    std::snprintf(sim, sizeof sim, "%.6f", s.similarity);
    std::cout << s.entry.id << "  " << sim << "  " << s.entry.problem_type << "\n";
  }
  return kExitOk;
}

int run_replay(const std::string& source, const std::string& target) {
  const SolveResult r = replay_run(fs::absolute(source), fs::absolute(target));
  const std::string a = hash_directory(source);
  const std::string b = hash_directory(target);
  std::cout << "source " << a << "\nreplay " << b << "\n";
  if (a != b) {
    std::cout << "replay differs from the recorded run\n";
    return kExitFailure;
  }
  std::cout << "replay identical" << (r.completed ? "" : " (run stopped at stage '" + r.failed_stage + "')")
            << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"execopt: natural-language decision problems to validated optimization results"};
  app.require_subcommand(1);

  std::string config, problem, run_dir, suite, report, store, corpus, query, query_file, source, target;
  bool resume = false;
  RetrievalConfig rc;

  auto* solve_cmd = app.add_subcommand("solve", "Run the full pipeline on one problem");
  solve_cmd->add_option("--config", config, "Run configuration JSON")->required()->check(CLI::ExistingFile);
  solve_cmd->add_option("--problem", problem, "Problem description text file")->required()->check(CLI::ExistingFile);
  solve_cmd->add_option("--run-dir", run_dir, "Run directory (overrides the config)");
  solve_cmd->add_flag("--resume", resume, "Reuse stages already completed in the run directory");

  auto* eval_cmd = app.add_subcommand("evaluate", "Score a benchmark suite");
  eval_cmd->add_option("--config", config, "Run configuration JSON")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--suite", suite, "Suite JSON lines")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--run-dir", run_dir, "Directory for per-instance runs");
  eval_cmd->add_option("--report", report, "Write the JSON report here");

  auto* ingest_cmd = app.add_subcommand("ingest", "Add solved examples to a memory store");
  ingest_cmd->add_option("--config", config, "Run configuration JSON (embedder settings)")->check(CLI::ExistingFile);
  ingest_cmd->add_option("--store", store, "Memory store file")->required();
  ingest_cmd->add_option("--input", corpus, "Corpus JSON lines")->required()->check(CLI::ExistingFile);

  auto* retrieve_cmd = app.add_subcommand("retrieve", "Select few-shot examples for a query");
  retrieve_cmd->add_option("--config", config, "Run configuration JSON (embedder settings)")->check(CLI::ExistingFile);
  retrieve_cmd->add_option("--store", store, "Memory store file")->required()->check(CLI::ExistingFile);
  retrieve_cmd->add_option("--query", query, "Query text");
  retrieve_cmd->add_option("--query-file", query_file, "Query text file")->check(CLI::ExistingFile);
  retrieve_cmd->add_option("--k", rc.select_k, "Examples to select")->capture_default_str();
  retrieve_cmd->add_option("--pool", rc.pool_size, "Candidate pool size")->capture_default_str();
  retrieve_cmd->add_option("--lambda", rc.lambda, "Diversity weight")->capture_default_str();
  retrieve_cmd->add_option("--threshold", rc.similarity_threshold, "Similarity threshold")->capture_default_str();

  auto* replay_cmd = app.add_subcommand("replay", "Re-execute a run from its provider log");
  replay_cmd->add_option("--run", source, "Recorded run directory")->required()->check(CLI::ExistingDirectory);
  replay_cmd->add_option("--out", target, "Directory for the replayed run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc_exit = app.exit(e);
    return rc_exit == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*solve_cmd) return run_solve(config, problem, run_dir, resume);
    if (*eval_cmd) return run_evaluate(config, suite, run_dir, report);
    if (*ingest_cmd) return run_ingest(config, store, corpus);
    if (*retrieve_cmd) return run_retrieve(config, store, query, query_file, rc);
    if (*replay_cmd) return run_replay(source, target);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << e.code() << ": " << e.what() << "\n";
    return kExitStage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStage;
  }
  return kExitFailure;
}
