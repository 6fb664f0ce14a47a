#include "execopt/providers.hpp"

#include <algorithm>
#include <sstream>
#include <thread>

#include "execopt/errors.hpp"
#include "execopt/hashing.hpp"

namespace execopt {

std::string_view to_string(RequestKind kind) {
  switch (kind) {
    case RequestKind::Extract: return "extract";
    case RequestKind::Judge: return "judge";
    case RequestKind::Recommend: return "recommend";
    case RequestKind::GenerateOptimizer: return "generate_optimizer";
    case RequestKind::GenerateSimulator: return "generate_simulator";
  }
  return "extract";
}

RequestKind parse_request_kind(std::string_view text) {
  for (auto k : {RequestKind::Extract, RequestKind::Judge, RequestKind::Recommend,
                 RequestKind::GenerateOptimizer, RequestKind::GenerateSimulator}) {
    if (to_string(k) == text) return k;
  }
  throw SchemaViolation("unknown request kind '" + std::string(text) + "'");
}

Embedding EmbeddingProvider::embed_one(const std::string& text) {
  std::vector<std::string> one{text};
  auto out = embed(one);
  if (out.size() != 1) throw ContractViolation("embedder returned a wrong number of vectors");
  return std::move(out.front());
}

Json driver_output_to_json(const DriverOutput& out) {
  Json j = Json::object();
  j["result"] = solver_run_to_json(out.run);
  j["fixes_applied"] = out.fixes_applied;
  return j;
}

DriverOutput driver_output_from_json(const Json& doc, const std::string& variant_name) {
  DriverOutput out;
  const bool wrapped = doc.is_object() && doc.contains("result");
  out.run = solver_run_from_json(wrapped ? doc["result"] : doc, variant_name);
  // flat replies may carry fixes_applied next to the result fields
  if (doc.is_object() && doc.contains("fixes_applied")) {
    const Json& fixes = doc["fixes_applied"];
    if (!fixes.is_array()) throw SchemaViolation("fixes_applied must be a list");
    for (const auto& f : fixes) {
      if (!f.is_string()) throw SchemaViolation("fixes_applied entries must be strings");
      out.fixes_applied.push_back(f.get<std::string>());
    }
  }
  return out;
}

std::string render_optimizer_prompt(const OptimizerTask& task) {
  std::string prompt;
  prompt += "Implement and run an optimizer for the model below and report the result as "
            "{\"optimal_variables\", \"optimal_objective_value\", \"status\", \"solver_info\"}.\n\n";
  prompt += "Variant: " + task.variant_name + "\n";
  prompt += "Iteration: " + std::to_string(task.iteration) + "\n";
  Json solvers = task.ranked_solvers;
  prompt += "Solver ranking: " + solvers.dump() + "\n";
  prompt += "Examples:";
  for (const auto& e : task.examples) prompt += " " + e.name;
  prompt += "\n\nModel:\n" + serialize_decision_process(task.process) + "\n";
  if (task.feedback) {
    prompt += "\nThe previous result failed validation. Discrepancy report:\n";
    prompt += task.feedback->dump(2) + "\n";
  }
  return prompt;
}

// ---------------------------------------------------------------------------

std::string RetryingLlm::complete(const ProviderRequest& request) {
  auto backoff = policy_.initial_backoff;
  for (int attempt = 0;; ++attempt) {
    try {
      return inner_->complete(request);
    } catch (const RateLimited&) {
      if (attempt >= policy_.max_retries) throw;
    } catch (const ProviderUnavailable&) {
      if (attempt >= policy_.max_retries) throw;
    }
    if (backoff.count() > 0) std::this_thread::sleep_for(backoff);
    backoff = std::chrono::milliseconds(
        static_cast<long long>(static_cast<double>(backoff.count()) * policy_.multiplier));
  }
}

// ---------------------------------------------------------------------------

namespace {

auto exchange_key(const Exchange& e) {
  return std::tie(e.phase, e.kind, e.sample, e.prompt_sha256);
}

Json exchange_to_json(const Exchange& e) {
  Json j = Json::object();
  j["phase"] = e.phase;
  j["kind"] = e.kind;
  j["sample"] = e.sample;
  j["prompt_sha256"] = e.prompt_sha256;
  j["prompt"] = e.prompt;
  j["response"] = e.response;
  return j;
}

}  // namespace

ExchangeLog::ExchangeLog(ExchangeLog&& other) noexcept : phase_(other.phase()) {
  std::lock_guard lock(other.mu_);
  entries_ = std::move(other.entries_);
}

void ExchangeLog::add(Exchange e) {
  std::lock_guard lock(mu_);
  for (const auto& existing : entries_) {
    if (exchange_key(existing) == exchange_key(e)) return;
  }
  entries_.push_back(std::move(e));
}

std::vector<Exchange> ExchangeLog::entries() const {
  std::vector<Exchange> copy;
  {
    std::lock_guard lock(mu_);
    copy = entries_;
  }
  std::sort(copy.begin(), copy.end(),
            [](const Exchange& a, const Exchange& b) { return exchange_key(a) < exchange_key(b); });
  return copy;
}

std::string ExchangeLog::to_jsonl() const {
  std::string out;
  for (const auto& e : entries()) out += exchange_to_json(e).dump() + "\n";
  return out;
}

void ExchangeLog::save(const std::filesystem::path& path) const { write_file(path, to_jsonl()); }

ExchangeLog ExchangeLog::from_jsonl(std::string_view text) {
  ExchangeLog log;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const Json j = Json::parse(line);
      Exchange e;
      e.phase = j.at("phase").get<int>();
      e.kind = j.at("kind").get<std::string>();
      e.sample = j.at("sample").get<int>();
      e.prompt_sha256 = j.at("prompt_sha256").get<std::string>();
      e.prompt = j.value("prompt", "");
      e.response = j.at("response").get<std::string>();
      log.add(std::move(e));
    } catch (const Json::exception& ex) {
      throw MalformedDocument("exchange log line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return log;
}

ExchangeLog ExchangeLog::load(const std::filesystem::path& path) {
  return from_jsonl(read_file(path));
}

std::string RecordingLlm::complete(const ProviderRequest& request) {
  std::string response = inner_->complete(request);
  log_->add({log_->phase(), std::string(to_string(request.kind)), request.sample,
             sha256_hex(request.prompt), request.prompt, response});
  return response;
}

std::vector<Embedding> RecordingEmbedder::embed(std::span<const std::string> texts) {
  auto vectors = inner_->embed(texts);
  for (std::size_t i = 0; i < texts.size() && i < vectors.size(); ++i) {
    log_->add({0, "embed", 0, sha256_hex(texts[i]), texts[i], Json(vectors[i]).dump()});
  }
  return vectors;
}

DriverOutput RecordingDriver::run(const OptimizerTask& task) {
  const std::string prompt = render_optimizer_prompt(task);
  Exchange e{log_->phase(), std::string(to_string(RequestKind::GenerateOptimizer)),
             task.variant_index, sha256_hex(prompt), prompt, ""};
  try {
    DriverOutput out = inner_->run(task);
    e.response = driver_output_to_json(out).dump();
    log_->add(std::move(e));
    return out;
  } catch (const std::exception& ex) {
    // Failures are recorded too so a replay fails the same way.
    e.response = Json{{"error", ex.what()}}.dump();
    log_->add(std::move(e));
    throw;
  }
}

ReplayStore::ReplayStore(const ExchangeLog& log) {
  for (const auto& e : log.entries()) {
    if (e.kind == "embed") {
      embeddings_.emplace(e.prompt_sha256, e.response);
    } else {
      responses_.emplace(std::make_tuple(e.phase, e.kind, e.sample, e.prompt_sha256), e.response);
    }
  }
}

const std::string& ReplayStore::lookup(int phase, std::string_view kind, int sample,
                                       const std::string& prompt_sha256) const {
  auto it = responses_.find(std::make_tuple(phase, std::string(kind), sample, prompt_sha256));
  if (it == responses_.end()) {
    throw ProviderUnavailable("no recorded " + std::string(kind) + " response for phase " +
                              std::to_string(phase) + ", sample " + std::to_string(sample) +
                              ", prompt " + prompt_sha256.substr(0, 12));
  }
  return it->second;
}

const std::string* ReplayStore::find_embedding(const std::string& text_sha256) const {
  auto it = embeddings_.find(text_sha256);
  return it == embeddings_.end() ? nullptr : &it->second;
}

std::string ReplayLlm::complete(const ProviderRequest& request) {
  return store_->lookup(phase_->phase(), to_string(request.kind), request.sample,
                        sha256_hex(request.prompt));
}

std::vector<Embedding> ReplayEmbedder::embed(std::span<const std::string> texts) {
  if (texts.empty()) throw ProviderError("embed called with no texts");
  std::vector<Embedding> out;
  for (const auto& t : texts) {
    const std::string* rec = store_->find_embedding(sha256_hex(t));
    if (rec == nullptr) throw ProviderUnavailable("no recorded embedding for text " + sha256_hex(t).substr(0, 12));
    out.push_back(Json::parse(*rec).get<Embedding>());
  }
  return out;
}

DriverOutput ReplayDriver::run(const OptimizerTask& task) {
  const std::string prompt = render_optimizer_prompt(task);
  const std::string& rec = store_->lookup(phase_->phase(), to_string(RequestKind::GenerateOptimizer),
                                          task.variant_index, sha256_hex(prompt));
  const Json doc = Json::parse(rec);
  if (doc.is_object() && doc.contains("error")) {
    throw Error("RecordedFailure", doc["error"].get<std::string>());
  }
  return driver_output_from_json(doc, task.variant_name);
}

}  // namespace execopt
