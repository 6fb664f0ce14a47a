#include "execopt/mock_providers.hpp"

#include <cctype>

#include "execopt/errors.hpp"
#include "execopt/hashing.hpp"

namespace execopt {

ScriptedLlm::ScriptedLlm(Json script, std::filesystem::path base_dir)
    : script_(std::move(script)), base_dir_(std::move(base_dir)) {
  if (!script_.is_object()) throw MalformedDocument("provider script must be a JSON object");
  for (const char* key : {"responses", "by_hash"}) {
    if (script_.contains(key) && !script_[key].is_object()) {
      throw MalformedDocument(std::string("provider script field '") + key + "' must be an object");
    }
  }
  if (script_.contains("by_marker")) {
    const Json& m = script_["by_marker"];
    if (!m.is_array()) throw MalformedDocument("provider script field 'by_marker' must be a list");
    for (const auto& rule : m) {
      if (!rule.is_object() || !rule.contains("contains") || !rule["contains"].is_string() ||
          !rule.contains("responses") || !rule["responses"].is_object()) {
        throw MalformedDocument("by_marker rules need 'contains' and 'responses'");
      }
    }
  }
}

std::shared_ptr<ScriptedLlm> ScriptedLlm::load(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw MalformedDocument(path.string() + ": " + e.what());
  }
  return std::make_shared<ScriptedLlm>(std::move(j), path.parent_path());
}

std::string ScriptedLlm::resolve(const Json& slot, const std::string& counter_key) {
  if (slot.is_string()) return slot.get<std::string>();
  if (slot.is_object() && slot.size() == 1) {
    if (slot.contains("file")) {
      return read_file(base_dir_ / slot["file"].get<std::string>());
    }
    if (slot.contains("error")) {
      const std::string kind = slot["error"].get<std::string>();
      if (kind == "rate_limited") throw RateLimited("scripted rate limit");
      throw ProviderUnavailable("scripted outage");
    }
    if (slot.contains("sequence")) {
      const Json& seq = slot["sequence"];
      if (!seq.is_array() || seq.empty()) throw MalformedDocument("empty scripted sequence");
      std::size_t step;
      {
        std::lock_guard lock(mu_);
        step = calls_[counter_key]++;
      }
      return resolve(seq[std::min(step, seq.size() - 1)], counter_key + "/" + std::to_string(step));
    }
  }
  return slot.dump();
}

std::string ScriptedLlm::complete(const ProviderRequest& request) {
  if (request.prompt.empty()) throw ContractViolation("provider request has an empty prompt");
  const std::string kind(to_string(request.kind));
  if (script_.contains("by_hash")) {
    const std::string key = kind + ":" + sha256_hex(request.prompt);
    if (script_["by_hash"].contains(key)) return resolve(script_["by_hash"][key], key);
  }
  const Json* responses = script_.contains("responses") ? &script_["responses"] : nullptr;
  std::string counter = kind + "#" + std::to_string(request.sample);
  if (script_.contains("by_marker")) {
    const Json& rules = script_["by_marker"];
    for (std::size_t r = 0; r < rules.size(); ++r) {
      if (request.prompt.find(rules[r]["contains"].get<std::string>()) != std::string::npos &&
          rules[r]["responses"].contains(kind)) {
        responses = &rules[r]["responses"];
        counter = "m" + std::to_string(r) + ":" + counter;
        break;
      }
    }
  }
  if (responses == nullptr || !responses->contains(kind)) {
    throw ProviderUnavailable("no scripted response for request kind '" + kind + "'");
  }
  const Json& slots = (*responses)[kind];
  if (!slots.is_array()) return resolve(slots, counter);
  if (slots.empty()) throw ProviderUnavailable("no scripted response for request kind '" + kind + "'");
  const std::size_t i = static_cast<std::size_t>(request.sample) % slots.size();
  return resolve(slots[i], counter);
}

std::string UnconfiguredLlm::complete(const ProviderRequest& request) {
  throw ProviderUnavailable("no provider configured for request kind '" +
                            std::string(to_string(request.kind)) + "'");
}

HashingEmbedder::HashingEmbedder(std::size_t dimension, std::uint64_t seed)
    : dimension_(dimension), seed_(seed) {
  if (dimension_ < 2) throw ConfigError("hashing embedder needs at least 2 dimensions");
}

std::string HashingEmbedder::id() const {
  return "hashing-d" + std::to_string(dimension_) + "-s" + std::to_string(seed_);
}

Embedding HashingEmbedder::embed_text(std::string_view text) const {
  Embedding v(dimension_, 0.0);
  const std::size_t buckets = dimension_ - 1;
  auto add = [&](std::string_view prefix, std::string_view feature, double weight) {
    std::string f(prefix);
    f += feature;
    const std::uint64_t h = mix64(fnv1a64(f) ^ mix64(seed_));
    v[h % buckets] += (h >> 63) ? weight : -weight;
  };

  std::string lower;
  lower.reserve(text.size());
  for (unsigned char c : text) lower += static_cast<char>(std::tolower(c));

  std::size_t i = 0;
  while (i < lower.size()) {
    if (!std::isalnum(static_cast<unsigned char>(lower[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < lower.size() && std::isalnum(static_cast<unsigned char>(lower[j]))) ++j;
    add("w:", std::string_view(lower).substr(i, j - i), 1.0);
    i = j;
  }
  for (std::size_t k = 0; k + 3 <= lower.size(); ++k) {
    add("c:", std::string_view(lower).substr(k, 3), 0.5);
  }
  v[buckets] = 1.0;
  return v;
}

std::vector<Embedding> HashingEmbedder::embed(std::span<const std::string> texts) {
  if (texts.empty()) throw ProviderError("embed called with no texts");
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_text(t));
  return out;
}

}  // namespace execopt
