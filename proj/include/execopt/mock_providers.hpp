#pragma once

// Offline providers: a scripted language model and a seeded hashing
// embedder. Both are pure functions of their inputs and script/seed.

#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <utility>

#include "execopt/providers.hpp"

namespace execopt {

// Script format:
//   {
//     "responses": {"<kind>": [slot, ...], ...},
//     "by_hash":   {"<kind>:<sha256 of prompt>": slot, ...},
//     "by_marker": [{"contains": "text", "responses": {"<kind>": [...]}}, ...]
//   }
// A slot is a string (returned verbatim), {"file": "rel/path"} (file text,
// relative to the script), {"error": "rate_limited" | "unavailable"}
// (thrown), {"sequence": [slot, ...]} (advances one step per call for the
// same kind and sample, then repeats the last), or any other JSON value
// (returned compactly serialized). by_hash wins; then the first by_marker
// rule whose text occurs in the prompt and that covers the kind; otherwise
// the slot is responses[kind][sample % size].
class ScriptedLlm final : public LlmProvider {
 public:
  ScriptedLlm(Json script, std::filesystem::path base_dir = {});
  static std::shared_ptr<ScriptedLlm> load(const std::filesystem::path& path);

  std::string complete(const ProviderRequest& request) override;
  std::string id() const override { return "scripted"; }

 private:
  std::string resolve(const Json& slot, const std::string& counter_key);

  Json script_;
  std::filesystem::path base_dir_;
  std::mutex mu_;
  std::map<std::string, std::size_t> calls_;
};

// Always unavailable; stands in for a provider nobody configured.
class UnconfiguredLlm final : public LlmProvider {
 public:
  std::string complete(const ProviderRequest& request) override;
  std::string id() const override { return "unconfigured"; }
};

// Feature hashing of lower-cased word unigrams and character trigrams into
// `dimension` buckets with a seeded sign. The last bucket is a constant bias
// so no text maps to the zero vector.
class HashingEmbedder final : public EmbeddingProvider {
 public:
  explicit HashingEmbedder(std::size_t dimension = 256, std::uint64_t seed = 0);
  std::vector<Embedding> embed(std::span<const std::string> texts) override;
  std::size_t dimension() const override { return dimension_; }
  std::string id() const override;

  Embedding embed_text(std::string_view text) const;

 private:
  std::size_t dimension_;
  std::uint64_t seed_;
};

}  // namespace execopt
