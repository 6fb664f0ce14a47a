#pragma once

// Live providers over HTTP: an OpenAI-compatible chat endpoint, an
// OpenAI-compatible embeddings endpoint, and a coding-agent endpoint that
// takes an OptimizerTask and answers with a DriverOutput.

#include <chrono>
#include <string>

#include "execopt/providers.hpp"

namespace execopt {

struct HttpEndpoint {
  std::string base;  // scheme://host[:port]
  std::string path;  // request path, starting with '/'

  // Splits a full URL; throws ConfigError.
  static HttpEndpoint parse(std::string_view url);
};

struct HttpSettings {
  std::string url;
  std::string model;
  std::string api_key;  // empty: no Authorization header
  std::chrono::seconds timeout{120};
};

// POST {url} with {"model", "messages":[{"role":"user","content":prompt}]};
// the reply is choices[0].message.content. 429 throws RateLimited,
// connection failures and 5xx throw ProviderUnavailable.
class OpenAiChatLlm final : public LlmProvider {
 public:
  explicit OpenAiChatLlm(HttpSettings s);
  std::string complete(const ProviderRequest& request) override;
  std::string id() const override { return "openai:" + settings_.model; }

 private:
  HttpSettings settings_;
  HttpEndpoint endpoint_;
};

class OpenAiEmbedder final : public EmbeddingProvider {
 public:
  OpenAiEmbedder(HttpSettings s, std::size_t dimension);
  std::vector<Embedding> embed(std::span<const std::string> texts) override;
  std::size_t dimension() const override { return dimension_; }
  std::string id() const override { return "openai-embed:" + settings_.model; }

 private:
  HttpSettings settings_;
  HttpEndpoint endpoint_;
  std::size_t dimension_;
};

// POST {url} with the task JSON; expects driver output JSON back.
class HttpOptimizerDriver final : public OptimizerDriver {
 public:
  explicit HttpOptimizerDriver(HttpSettings s);
  DriverOutput run(const OptimizerTask& task) override;
  std::string id() const override { return "http-agent"; }

 private:
  HttpSettings settings_;
  HttpEndpoint endpoint_;
};

Json optimizer_task_to_json(const OptimizerTask& task);

}  // namespace execopt
