#include "execopt/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <future>
#include <set>

#include "execopt/errors.hpp"
#include "execopt/hashing.hpp"
#include "execopt/http_providers.hpp"
#include "execopt/mbr.hpp"
#include "execopt/memory_store.hpp"
#include "execopt/mock_providers.hpp"
#include "execopt/toy_optimizer.hpp"

namespace execopt {

namespace fs = std::filesystem;

namespace {

enum Phase { kRetrievalPhase = 1, kExtractionPhase, kSelectionPhase, kRecommendationPhase, kValidationPhase };

std::string secret_from_env(const std::string& var) {
  if (var.empty()) return {};
  const char* v = std::getenv(var.c_str());
  return v == nullptr ? std::string() : std::string(v);
}

std::string embedder_id(const EmbedderSettings& e, std::uint64_t seed) {
  if (e.type == "hashing") return HashingEmbedder(e.dimension, seed).id();
  return "openai-embed:" + e.model;
}

void write_json(const fs::path& path, const Json& doc) { write_file(path, doc.dump(2) + "\n"); }

Json read_json(const fs::path& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw MalformedDocument(path.string() + ": " + e.what());
  }
}

Json gate_to_json(const GateResult& g) {
  Json j = Json::object();
  j["passed"] = g.passed;
  j["diagnostics"] = g.diagnostics;
  j["feasible_witness"] = g.feasible_witness ? Json(*g.feasible_witness) : Json(nullptr);
  return j;
}

std::vector<UnitCheck> load_checks(const fs::path& path) {
  const Json doc = read_json(path);
  if (!doc.is_array()) throw ConfigError(path.string() + ": simulator checks must be a list");
  std::vector<UnitCheck> out;
  for (const auto& c : doc) out.push_back(unit_check_from_json(c));
  return out;
}

// Runs f(0..n-1) with at most `limit` in flight; results in index order.
template <typename F>
auto fan_out(int n, std::size_t limit, F f) {
  using R = decltype(f(0));
  std::vector<R> out;
  out.reserve(n);
  for (int start = 0; start < n; start += static_cast<int>(limit)) {
    std::vector<std::future<R>> batch;
    const int end = std::min(n, start + static_cast<int>(limit));
    for (int i = start; i < end; ++i) batch.push_back(std::async(std::launch::async, f, i));
    for (auto& fut : batch) out.push_back(fut.get());
  }
  return out;
}

struct StageFailure {
  std::string stage;
  std::string code;
  std::string message;
};

class RunState {
 public:
  RunState(fs::path dir, bool resume) : dir_(std::move(dir)) {
    if (resume && fs::exists(dir_ / "stages.json")) {
      done_ = read_json(dir_ / "stages.json").at("completed").get<std::vector<std::string>>();
    }
  }
  bool done(const std::string& stage) const {
    return std::find(done_.begin(), done_.end(), stage) != done_.end();
  }
  void mark(const std::string& stage) {
    if (!done(stage)) done_.push_back(stage);
    write_json(dir_ / "stages.json", Json{{"completed", done_}});
  }
  const std::vector<std::string>& completed() const { return done_; }

 private:
  fs::path dir_;
  std::vector<std::string> done_;
};

struct Example {
  std::string id;
  std::string problem_type;
  double similarity = 0.0;
  std::string formulation;
  std::string code;
};

std::vector<Example> load_examples(const fs::path& dir) {
  std::vector<Example> out;
  for (const auto& j : read_json(dir / "index.json")) {
    Example e;
    e.id = j.at("id").get<std::string>();
    e.problem_type = j.at("problem_type").get<std::string>();
    e.similarity = j.at("similarity").get<double>();
    e.formulation = read_file(dir / e.id / "formulation.txt");
    e.code = read_file(dir / e.id / "code.py");
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Providers

ProviderSet make_providers(const RunConfig& cfg) {
  ProviderSet set;
  set.log = std::make_shared<ExchangeLog>();

  std::shared_ptr<LlmProvider> llm;
  if (cfg.llm.type == "scripted") {
    llm = ScriptedLlm::load(cfg.llm.script);
  } else if (cfg.llm.type == "openai") {
    llm = std::make_shared<OpenAiChatLlm>(
        HttpSettings{cfg.llm.endpoint, cfg.llm.model, secret_from_env(cfg.llm.api_key_env)});
  } else {
    llm = std::make_shared<UnconfiguredLlm>();
  }
  llm = std::make_shared<RetryingLlm>(std::move(llm), cfg.retry);
  set.llm = std::make_shared<RecordingLlm>(std::move(llm), set.log);

  std::shared_ptr<EmbeddingProvider> embedder;
  if (cfg.embedder.type == "hashing") {
    embedder = std::make_shared<HashingEmbedder>(cfg.embedder.dimension, cfg.seed);
  } else {
    embedder = std::make_shared<OpenAiEmbedder>(
        HttpSettings{cfg.embedder.endpoint, cfg.embedder.model, secret_from_env(cfg.embedder.api_key_env)},
        cfg.embedder.dimension);
  }
  set.embedder = std::make_shared<RecordingEmbedder>(std::move(embedder), set.log);

  std::vector<std::shared_ptr<OptimizerDriver>> drivers;
  if (cfg.optimizer.type == "toy") {
    const VariableDomain domain = VariableDomain::load(cfg.optimizer.domain);
    ToyOptions opts;
    opts.max_free_variables = cfg.optimizer.max_free_variables;
    opts.max_grid_points = cfg.optimizer.max_grid_points;
    std::vector<std::vector<Fault>> faults(static_cast<std::size_t>(cfg.ensemble.num_variants));
    for (std::size_t v = 0; v < cfg.optimizer.faults.size() && v < faults.size(); ++v) {
      for (const auto& f : cfg.optimizer.faults[v]) faults[v].push_back(Fault::parse(f));
    }
    drivers = faulty_optimize_variants(domain, opts, faults);
  } else {
    auto http = std::make_shared<HttpOptimizerDriver>(
        HttpSettings{cfg.optimizer.endpoint, "", secret_from_env("EXECOPT_AGENT_API_KEY")});
    drivers.assign(static_cast<std::size_t>(cfg.ensemble.num_variants), http);
  }
  for (auto& d : drivers) set.drivers.push_back(std::make_shared<RecordingDriver>(d, set.log));
  return set;
}

ProviderSet make_replay_providers(const RunConfig& cfg, const ExchangeLog& recorded) {
  ProviderSet set;
  set.log = std::make_shared<ExchangeLog>();
  auto store = std::make_shared<const ReplayStore>(recorded);
  set.llm = std::make_shared<RecordingLlm>(std::make_shared<ReplayLlm>(store, set.log, "replay"), set.log);
  set.embedder = std::make_shared<RecordingEmbedder>(
      std::make_shared<ReplayEmbedder>(store, cfg.embedder.dimension, embedder_id(cfg.embedder, cfg.seed)),
      set.log);
  auto driver = std::make_shared<ReplayDriver>(store, set.log, "replay");
  for (int v = 0; v < cfg.ensemble.num_variants; ++v) {
    set.drivers.push_back(std::make_shared<RecordingDriver>(driver, set.log));
  }
  return set;
}

// ---------------------------------------------------------------------------
// Prompts

std::string render_extract_prompt(std::string_view problem,
                                  const std::vector<std::string>& example_formulations) {
  std::string p =
      "Extract a complete mathematical specification of an optimization problem from a "
      "natural-language description.\n\n"
      "Core logic:\n"
      "- Interpret the problem strictly from problem_description.\n"
      "- Extract all explicitly stated data, parameters, variables, objectives, and constraints "
      "without omission.\n"
      "- Do not summarize, truncate, or infer unstated information.\n"
      "- Represent the problem using structured components:\n"
      "  * inputs and parameters\n"
      "  * exogenous variables and uncertainties\n"
      "  * decision and state variables\n"
      "  * objective function\n"
      "  * constraints\n"
      "  * transition function (if applicable)\n\n"
      "Type inference logic:\n"
      "- Determine variable types using a strict priority:\n"
      "  1) explicit textual indicators,\n"
      "  2) cost unit semantics (per-item vs per-measure),\n"
      "  3) naming semantics (discrete objects vs divisible quantities).\n"
      "- Do not guess or add qualifiers not stated in the text.\n\n"
      "Representation rules:\n"
      "- Use Python-style symbolic expressions.\n"
      "- Materialize all tabular or graph data as explicit nested lists.\n"
      "- Express all constraints as atomic expressions.\n\n"
      "Output format (EXACT):\n"
      "Return exactly one JSON object with the following structure:\n\n"
      "{\n"
      "  \"problem_description\": \"...\",\n"
      "  \"decision_variables\": [\n"
      "    { \"name\": \"...\", \"type\": \"INTEGER/CONTINUOUS/BINARY\", \"description\": \"...\" }\n"
      "  ],\n"
      "  \"inputs\": [\n"
      "    { \"name\": \"...\", \"value\": \"...\", \"units\": \"...\", \"description\": \"...\" }\n"
      "  ],\n"
      "  \"exogenous_variables\": [],\n"
      "  \"exogenous_uncertainties\": [],\n"
      "  \"state_variables\": [],\n"
      "  \"transition_function\": \"\",\n"
      "  \"objective_function\": {\n"
      "    \"direction\": \"minimize/maximize\",\n"
      "    \"expression\": \"...\",\n"
      "    \"description\": \"...\"\n"
      "  },\n"
      "  \"constraints\": [\n"
      "    { \"expression\": \"...\", \"description\": \"...\" }\n"
      "  ]\n"
      "}\n\n";
  if (!example_formulations.empty()) {
    p += "Similar solved problems (soft guidance only):\n";
    for (std::size_t i = 0; i < example_formulations.size(); ++i) {
      p += "--- example " + std::to_string(i + 1) + " ---\n" + example_formulations[i] + "\n";
    }
    p += "\n";
  }
  p += "Inputs:\n- Problem description: ";
  p += problem;
  p += "\n";
  return p;
}

std::string extract_json_object(std::string_view reply) {
  const auto first = reply.find('{');
  const auto last = reply.rfind('}');
  if (first == std::string_view::npos || last == std::string_view::npos || last < first) {
    throw MalformedDocument("reply contains no JSON object");
  }
  return std::string(reply.substr(first, last - first + 1));
}

// ---------------------------------------------------------------------------
// Result bundle

int SolveResult::exit_code() const {
  if (!completed) return 3;
  return validation_passed() ? 0 : 2;
}

Json SolveResult::to_json() const {
  Json j = Json::object();
  j["run_id"] = run_id;
  j["completed"] = completed;
  j["failed_stage"] = failed_stage.empty() ? Json(nullptr) : Json(failed_stage);
  j["error"] = error.empty() ? Json(nullptr) : Json{{"code", error_code}, {"message", error}};
  j["completed_stages"] = completed_stages;
  j["selected_candidate"] = selected_candidate == 0 ? Json(nullptr) : Json(selected_candidate);
  Json solvers = Json::array();
  for (const auto& r : recommendations) solvers.push_back(r.solver);
  j["recommended_solvers"] = solvers;
  if (consensus) {
    j["status"] = std::string(to_string(consensus->status));
    j["objective_value"] = number_or_null(consensus->objective_value);
    Json vars = Json::object();
    for (const auto& [k, v] : consensus->variables) vars[k] = v;
    j["optimal_variables"] = vars;
  } else {
    j["status"] = nullptr;
    j["objective_value"] = nullptr;
    j["optimal_variables"] = nullptr;
  }
  j["validation_passed"] = validation ? Json(validation->passed) : Json(nullptr);
  j["num_validation_iterations"] =
      validation ? Json(static_cast<int>(validation->history.size())) : Json(nullptr);
  return j;
}

std::string run_id_for(std::string_view problem, std::uint64_t seed) {
  return "r" + sha256_hex(std::string(problem) + "\n" + std::to_string(seed)).substr(0, 12);
}

// ---------------------------------------------------------------------------
// Stages

SolveResult solve(const std::string& problem, const RunConfig& cfg, ProviderSet& providers,
                  const SolveOptions& options) {
  cfg.validate();
  if (providers.drivers.size() != static_cast<std::size_t>(cfg.ensemble.num_variants)) {
    throw ConfigError("need one optimizer driver per variant");
  }
  const fs::path dir = cfg.run_dir;
  fs::create_directories(dir);
  auto& log = *providers.log;
  const fs::path log_path = dir / "providers" / "exchanges.jsonl";
  if (options.resume && fs::exists(log_path)) {
    for (auto& e : ExchangeLog::load(log_path).entries()) log.add(std::move(e));
  }

  SolveResult result;
  result.run_id = run_id_for(problem, cfg.seed);
  RunState state(dir, options.resume);
  write_file(dir / "problem.txt", problem);
  write_json(dir / "config.json", run_config_to_json(cfg));

  auto finish = [&]() {
    result.completed_stages = state.completed();
    log.save(log_path);
    write_json(dir / "result.json", result.to_json());
    return result;
  };

  std::string stage;
  try {
    // Retrieval: materialize few-shot examples.
    stage = "retrieval";
    log.set_phase(kRetrievalPhase);
    std::vector<Example> examples;
    if (state.done(stage)) {
      examples = load_examples(dir / "examples");
    } else {
      Json index = Json::array();
      // An empty problem has nothing to embed; extraction reports it.
      if (!cfg.memory_store.empty() && !problem.empty()) {
        const MemoryStore store = MemoryStore::load(cfg.memory_store);
        if (store.dimension() != providers.embedder->dimension()) {
          throw DimensionMismatch("memory store dimension " + std::to_string(store.dimension()) +
                                  " differs from the embedder's " +
                                  std::to_string(providers.embedder->dimension()));
        }
        const Embedding q = providers.embedder->embed_one(problem);
        std::vector<ScoredEntry> picked;
        if (store.size() > 0) picked = store.retrieve(q, cfg.retrieval);
        for (const auto& s : picked) {
          Example e{s.entry.id, s.entry.problem_type, s.similarity, s.entry.formulation, s.entry.code};
          write_file(dir / "examples" / e.id / "formulation.txt", e.formulation);
          write_file(dir / "examples" / e.id / "code.py", e.code);
          index.push_back(Json{{"id", e.id},
                               {"problem_type", e.problem_type},
                               {"similarity", e.similarity},
                               {"formulation", e.id + "/formulation.txt"},
                               {"code", e.id + "/code.py"}});
          examples.push_back(std::move(e));
        }
      }
      write_json(dir / "examples" / "index.json", index);
      state.mark(stage);
    }

    // Extraction: n candidate formulations.
    stage = "extraction";
    log.set_phase(kExtractionPhase);
    std::vector<ExtractionCandidate> candidates;
    if (state.done(stage)) {
      for (const auto& c : read_json(dir / "extraction" / "candidates.json")) {
        if (!c.at("valid").get<bool>()) continue;
        const int id = c.at("id").get<int>();
        candidates.push_back(make_candidate(
            id, parse_decision_process(read_file(dir / "extraction" / ("candidate_" + std::to_string(id) + ".json")))));
      }
    } else {
      if (problem.empty()) throw SchemaViolation("problem description is empty");
      std::vector<std::string> formulations;
      for (const auto& e : examples) formulations.push_back(e.formulation);
      const std::string prompt = render_extract_prompt(problem, formulations);
      struct Reply {
        std::string text;
        std::string error;
        bool provider_failed = false;
      };
      auto replies = fan_out(cfg.mbr.num_candidates, cfg.max_in_flight, [&](int i) {
        ProviderRequest req{RequestKind::Extract, prompt, {}, result.run_id, i};
        Reply r;
        try {
          r.text = providers.llm->complete(req);
        } catch (const ProviderError& e) {
          r.error = e.what();
          r.provider_failed = true;
        }
        return r;
      });
      Json summary = Json::array();
      std::string first_provider_error;
      for (int i = 0; i < cfg.mbr.num_candidates; ++i) {
        const int id = i + 1;
        const fs::path base = dir / "extraction" / ("candidate_" + std::to_string(id));
        Json entry = {{"id", id}, {"valid", false}, {"error", nullptr}};
        const Reply& r = replies[static_cast<std::size_t>(i)];
        if (r.provider_failed) {
          entry["error"] = r.error;
          if (first_provider_error.empty()) first_provider_error = r.error;
        } else {
          try {
            DecisionProcess p = parse_decision_process(extract_json_object(r.text));
            write_file(base.string() + ".json", serialize_decision_process(p) + "\n");
            candidates.push_back(make_candidate(id, std::move(p)));
            entry["valid"] = true;
          } catch (const Error& e) {
            write_file(base.string() + ".raw.txt", r.text);
            entry["error"] = e.code() + ": " + e.what();
          }
        }
        summary.push_back(entry);
      }
      if (candidates.empty()) {
        if (!first_provider_error.empty()) throw ProviderUnavailable(first_provider_error);
        throw SchemaViolation("no extraction candidate is a valid decision process");
      }
      write_json(dir / "extraction" / "candidates.json", summary);
      state.mark(stage);
    }

    // Selection: component-wise MBR, then the judge over the top q.
    stage = "selection";
    log.set_phase(kSelectionPhase);
    if (state.done(stage)) {
      const Json sel = read_json(dir / "extraction" / "judge.json");
      result.selected_candidate = sel.at("chosen").get<int>();
      result.selected = parse_decision_process(read_file(dir / "extraction" / "selected.json"));
    } else {
      Json mbr = Json::object();
      std::vector<ExtractionCandidate> top;
      if (candidates.size() >= 2) {
        embed_candidates(candidates, *providers.embedder);
        Json scores = Json::array();
        for (const auto& s : score_candidates(candidates, cfg.mbr)) {
          Json comps = Json::object();
          for (const auto& [k, v] : s.components) comps[k] = v;
          scores.push_back(Json{{"id", s.id}, {"utility", s.utility}, {"components", comps}});
        }
        top = select_top_q(candidates, cfg.mbr);
        const auto m = consistency_metrics(candidates);
        mbr["scores"] = scores;
        mbr["consistency"] = m.consistency;
        mbr["stability"] = m.stability;
      } else {
        top = candidates;
        mbr["scores"] = Json::array();
        mbr["consistency"] = nullptr;
        mbr["stability"] = nullptr;
      }
      Json top_ids = Json::array();
      for (const auto& c : top) top_ids.push_back(c.id);
      mbr["top_q"] = top_ids;
      write_json(dir / "extraction" / "mbr.json", mbr);

      JudgeOutcome judged = judge_rerank(top, problem, providers.llm.get(), result.run_id);
      Json jj = Json::object();
      jj["chosen"] = judged.chosen.id;
      jj["judge_called"] = judged.judge_called;
      jj["fallback"] = judged.fallback;
      jj["verdict"] = judged.verdict ? judge_verdict_to_json(*judged.verdict) : Json(nullptr);
      jj["diagnostics"] = judged.diagnostics;
      write_json(dir / "extraction" / "judge.json", jj);
      write_file(dir / "extraction" / "selected.json", serialize_decision_process(judged.chosen.process) + "\n");
      result.selected_candidate = judged.chosen.id;
      result.selected = judged.chosen.process;
      state.mark(stage);
    }
    const DecisionProcess& process = *result.selected;

    // Recommendation.
    stage = "recommendation";
    log.set_phase(kRecommendationPhase);
    if (state.done(stage)) {
      result.recommendations =
          recommendations_from_json(read_json(dir / "recommendation" / "solvers.json"));
    } else {
      RecommendationResult rec = recommend(process, cfg.available_solvers, *providers.llm, result.run_id);
      Json doc = recommendations_to_json(rec.recommendations);
      doc["warnings"] = rec.warnings;
      doc["fallback"] = rec.fallback;
      write_json(dir / "recommendation" / "solvers.json", doc);
      result.recommendations = rec.recommendations;
      state.mark(stage);
    }

    // Validation: simulator gate, then the ensemble refinement loop.
    stage = "validation";
    log.set_phase(kValidationPhase);
    ExpressionSimulator simulator(process);
    const auto checks =
        cfg.simulator_checks.empty() ? default_unit_checks(process) : load_checks(cfg.simulator_checks);
    result.gate = simulator_gate(simulator, checks, cfg.validation);
    write_json(dir / "validation" / "simulator_gate.json", gate_to_json(*result.gate));

    LoopInputs in;
    in.process = &process;
    in.drivers = providers.drivers;
    in.simulator = &simulator;
    in.consensus = cfg.ensemble;
    in.consensus.direction = process.objective_function.direction;
    in.validation = cfg.validation;
    in.task_template.run_id = result.run_id;
    in.task_template.process = process;
    for (const auto& r : result.recommendations) in.task_template.ranked_solvers.push_back(r.solver);
    for (const auto& e : examples) in.task_template.examples.push_back({e.id + "/code.py", e.code});
    if (result.gate->passed) in.feasible_witness = result.gate->feasible_witness;
    in.on_iteration = [&](const IterationRecord& rec) {
      const fs::path it = dir / "optimizer_runs" / ("iteration_" + std::to_string(rec.iteration));
      for (const auto& out : rec.outputs) write_json(it / (out.run.variant_name + ".json"), driver_output_to_json(out));
      write_json(it / "ensemble.json", consensus_to_json(rec.consensus));
      if (rec.report) write_json(it / "discrepancy_report.json", rec.report->json);
    };
    ValidationReport report = refinement_loop(in);
    if (report.history.empty()) throw Error("StageError", "validation loop ran no iterations");
    result.consensus = report.history.back().consensus;
    write_json(dir / "optimizer_runs" / "ensemble.json", consensus_to_json(*result.consensus));
    write_json(dir / "validation" / "validation_results.json", validation_report_to_json(report));
    result.validation = std::move(report);
    state.mark(stage);
    result.completed = true;
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    result.failed_stage = stage;
    result.error_code = e.code();
    result.error = e.what();
  } catch (const std::exception& e) {
    result.failed_stage = stage;
    result.error_code = "InternalError";
    result.error = e.what();
  }
  return finish();
}

SolveResult replay_run(const fs::path& source, const fs::path& target) {
  if (!fs::exists(source / "config.json") || !fs::exists(source / "providers" / "exchanges.jsonl")) {
    throw ConfigError(source.string() + " is not a run directory");
  }
  if (fs::weakly_canonical(source) == fs::weakly_canonical(target)) {
    throw ConfigError("replay target must differ from the source run");
  }
  RunConfig cfg = run_config_from_json(read_json(source / "config.json"));
  cfg.run_dir = target;
  const ExchangeLog recorded = ExchangeLog::load(source / "providers" / "exchanges.jsonl");
  ProviderSet providers = make_replay_providers(cfg, recorded);
  fs::remove_all(target);
  return solve(read_file(source / "problem.txt"), cfg, providers);
}

PipelineOutput pipeline_output(const SolveResult& r) {
  PipelineOutput out;
  if (!r.completed) {
    out.error = r.failed_stage + ": " + r.error;
    return out;
  }
  out.status = r.consensus->status;
  out.objective = r.consensus->objective_value;
  out.validation_passed = r.validation_passed();
  out.has_integer_structure = r.selected && r.selected->has_integer_structure();
  out.gate_passed = r.gate && r.gate->passed;
  out.feasible_witness = r.gate && r.gate->feasible_witness.has_value();
  return out;
}

Pipeline make_suite_pipeline(const RunConfig& cfg) {
  return [cfg](const BenchmarkInstance& inst) {
    RunConfig local = cfg;
    local.run_dir = cfg.run_dir / "instances" / inst.id;
    fs::remove_all(local.run_dir);
    ProviderSet providers = make_providers(local);
    return pipeline_output(solve(inst.description, local, providers));
  };
}

}  // namespace execopt
