#pragma once

// Provider contracts: language models, embedders, and optimizer drivers
// (coding agents that build and run an optimizer). Every concrete provider,
// live or offline, sits behind one of these interfaces. The recording and
// replay decorators capture every exchange so a run can be re-executed
// without touching the original providers.

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "execopt/decision_model.hpp"

namespace execopt {

enum class RequestKind { Extract, Judge, Recommend, GenerateOptimizer, GenerateSimulator };

std::string_view to_string(RequestKind kind);
RequestKind parse_request_kind(std::string_view text);

struct Attachment {
  std::string name;
  std::string content;
};

struct ProviderRequest {
  RequestKind kind = RequestKind::Extract;
  std::string prompt;
  std::vector<Attachment> attachments;
  std::string run_id;
  // Index of this request within a fan-out (candidate i, variant j, retry).
  // Scripted providers key on it so concurrent fan-out stays deterministic.
  int sample = 0;
};

class LlmProvider {
 public:
  virtual ~LlmProvider() = default;
  virtual std::string complete(const ProviderRequest& request) = 0;
  virtual std::string id() const = 0;
};

using Embedding = std::vector<double>;

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  // Throws ProviderError on an empty batch.
  virtual std::vector<Embedding> embed(std::span<const std::string> texts) = 0;
  virtual std::size_t dimension() const = 0;
  virtual std::string id() const = 0;

  Embedding embed_one(const std::string& text);
};

// What an optimizer variant is asked to do on one iteration.
struct OptimizerTask {
  std::string run_id;
  std::string variant_name;
  int variant_index = 0;
  int iteration = 0;
  DecisionProcess process;
  std::vector<std::string> ranked_solvers;
  std::vector<Attachment> examples;
  // Discrepancy report from the previous failed validation, if any.
  std::optional<Json> feedback;
};

struct DriverOutput {
  SolverRun run;
  std::vector<std::string> fixes_applied;
};

Json driver_output_to_json(const DriverOutput& out);
DriverOutput driver_output_from_json(const Json& doc, const std::string& variant_name);

// Canonical prompt text for an optimizer task; also the replay key.
std::string render_optimizer_prompt(const OptimizerTask& task);

class OptimizerDriver {
 public:
  virtual ~OptimizerDriver() = default;
  virtual DriverOutput run(const OptimizerTask& task) = 0;
  virtual std::string id() const = 0;
};

// ---------------------------------------------------------------------------
// Retry

struct RetryPolicy {
  int max_retries = 2;
  std::chrono::milliseconds initial_backoff{200};
  double multiplier = 2.0;
};

// Retries RateLimited and ProviderUnavailable with exponential backoff.
class RetryingLlm final : public LlmProvider {
 public:
  RetryingLlm(std::shared_ptr<LlmProvider> inner, RetryPolicy policy)
      : inner_(std::move(inner)), policy_(policy) {}
  std::string complete(const ProviderRequest& request) override;
  std::string id() const override { return inner_->id(); }

 private:
  std::shared_ptr<LlmProvider> inner_;
  RetryPolicy policy_;
};

// ---------------------------------------------------------------------------
// Exchange log, recording and replay

struct Exchange {
  int phase = 0;
  std::string kind;  // request kind, or "embed"
  int sample = 0;
  std::string prompt_sha256;
  std::string prompt;
  std::string response;
};

// Thread-safe list of provider exchanges. Serialized sorted by
// (phase, kind, sample, prompt hash) so concurrent fan-out produces the same
// bytes regardless of completion order.
class ExchangeLog {
 public:
  ExchangeLog() = default;
  ExchangeLog(ExchangeLog&& other) noexcept;
  ExchangeLog& operator=(ExchangeLog&&) = delete;

  void set_phase(int phase) { phase_.store(phase); }
  int phase() const { return phase_.load(); }

  void add(Exchange e);
  std::vector<Exchange> entries() const;
  std::string to_jsonl() const;
  void save(const std::filesystem::path& path) const;

  static ExchangeLog load(const std::filesystem::path& path);
  static ExchangeLog from_jsonl(std::string_view text);

 private:
  mutable std::mutex mu_;
  std::vector<Exchange> entries_;
  std::atomic<int> phase_{0};
};

class RecordingLlm final : public LlmProvider {
 public:
  RecordingLlm(std::shared_ptr<LlmProvider> inner, std::shared_ptr<ExchangeLog> log)
      : inner_(std::move(inner)), log_(std::move(log)) {}
  std::string complete(const ProviderRequest& request) override;
  std::string id() const override { return inner_->id(); }

 private:
  std::shared_ptr<LlmProvider> inner_;
  std::shared_ptr<ExchangeLog> log_;
};

class RecordingEmbedder final : public EmbeddingProvider {
 public:
  RecordingEmbedder(std::shared_ptr<EmbeddingProvider> inner, std::shared_ptr<ExchangeLog> log)
      : inner_(std::move(inner)), log_(std::move(log)) {}
  std::vector<Embedding> embed(std::span<const std::string> texts) override;
  std::size_t dimension() const override { return inner_->dimension(); }
  std::string id() const override { return inner_->id(); }

 private:
  std::shared_ptr<EmbeddingProvider> inner_;
  std::shared_ptr<ExchangeLog> log_;
};

class RecordingDriver final : public OptimizerDriver {
 public:
  RecordingDriver(std::shared_ptr<OptimizerDriver> inner, std::shared_ptr<ExchangeLog> log)
      : inner_(std::move(inner)), log_(std::move(log)) {}
  DriverOutput run(const OptimizerTask& task) override;
  std::string id() const override { return inner_->id(); }

 private:
  std::shared_ptr<OptimizerDriver> inner_;
  std::shared_ptr<ExchangeLog> log_;
};

// Answers from a recorded log, keyed by (phase, kind, sample, prompt hash).
// Unknown requests throw ProviderUnavailable.
class ReplayStore {
 public:
  explicit ReplayStore(const ExchangeLog& log);
  const std::string& lookup(int phase, std::string_view kind, int sample,
                            const std::string& prompt_sha256) const;
  const std::string* find_embedding(const std::string& text_sha256) const;

 private:
  std::map<std::tuple<int, std::string, int, std::string>, std::string> responses_;
  std::map<std::string, std::string> embeddings_;
};

class ReplayLlm final : public LlmProvider {
 public:
  ReplayLlm(std::shared_ptr<const ReplayStore> store, std::shared_ptr<ExchangeLog> phase_source,
            std::string id)
      : store_(std::move(store)), phase_(std::move(phase_source)), id_(std::move(id)) {}
  std::string complete(const ProviderRequest& request) override;
  std::string id() const override { return id_; }

 private:
  std::shared_ptr<const ReplayStore> store_;
  std::shared_ptr<ExchangeLog> phase_;
  std::string id_;
};

class ReplayEmbedder final : public EmbeddingProvider {
 public:
  ReplayEmbedder(std::shared_ptr<const ReplayStore> store, std::size_t dimension, std::string id)
      : store_(std::move(store)), dimension_(dimension), id_(std::move(id)) {}
  std::vector<Embedding> embed(std::span<const std::string> texts) override;
  std::size_t dimension() const override { return dimension_; }
  std::string id() const override { return id_; }

 private:
  std::shared_ptr<const ReplayStore> store_;
  std::size_t dimension_;
  std::string id_;
};

class ReplayDriver final : public OptimizerDriver {
 public:
  ReplayDriver(std::shared_ptr<const ReplayStore> store, std::shared_ptr<ExchangeLog> phase_source,
               std::string id)
      : store_(std::move(store)), phase_(std::move(phase_source)), id_(std::move(id)) {}
  DriverOutput run(const OptimizerTask& task) override;
  std::string id() const override { return id_; }

 private:
  std::shared_ptr<const ReplayStore> store_;
  std::shared_ptr<ExchangeLog> phase_;
  std::string id_;
};

}  // namespace execopt
