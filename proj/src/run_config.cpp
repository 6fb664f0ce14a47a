#include "execopt/run_config.hpp"

#include <cstdlib>
#include <set>

#include "execopt/errors.hpp"
#include "execopt/hashing.hpp"

namespace execopt {

namespace fs = std::filesystem;

namespace {

void check_keys(const Json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) {
      const std::string path = where == "config" ? key : std::string(where) + "." + key;
      throw ConfigError("unknown config key '" + path + "'");
    }
  }
}

template <typename T>
void read(const Json& obj, const char* key, T& out, std::string_view where) {
  if (!obj.contains(key)) return;
  try {
    out = obj[key].get<T>();
  } catch (const Json::exception&) {
    throw ConfigError("config key '" + std::string(where) + "." + key + "' has the wrong type");
  }
}

void read_path(const Json& obj, const char* key, fs::path& out, const fs::path& base,
               std::string_view where) {
  std::string s;
  read(obj, key, s, where);
  if (s.empty()) return;
  fs::path p(s);
  out = p.is_absolute() || base.empty() ? p : base / p;
}

std::string path_text(const fs::path& p) { return p.empty() ? std::string() : p.string(); }

}  // namespace

void RunConfig::validate() const {
  mbr.validate();
  retrieval.validate();
  ensemble.validate();
  validation.validate();
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (max_in_flight == 0) throw ConfigError("max_in_flight must be positive");
  if (available_solvers.empty()) throw ConfigError("available_solvers must not be empty");
  if (llm.type != "scripted" && llm.type != "openai" && llm.type != "none") {
    throw ConfigError("llm.type must be scripted, openai or none, got '" + llm.type + "'");
  }
  if (llm.type == "scripted" && llm.script.empty()) throw ConfigError("llm.script is required for a scripted provider");
  if (llm.type == "openai" && llm.endpoint.empty()) throw ConfigError("llm.endpoint is required for an openai provider");
  if (embedder.type != "hashing" && embedder.type != "openai") {
    throw ConfigError("embedder.type must be hashing or openai, got '" + embedder.type + "'");
  }
  if (embedder.dimension < 2) throw ConfigError("embedder.dimension must be at least 2");
  if (embedder.type == "openai" && embedder.endpoint.empty()) {
    throw ConfigError("embedder.endpoint is required for an openai embedder");
  }
  if (optimizer.type != "toy" && optimizer.type != "http") {
    throw ConfigError("optimizer.type must be toy or http, got '" + optimizer.type + "'");
  }
  if (optimizer.type == "toy" && optimizer.domain.empty()) {
    throw ConfigError("optimizer.domain is required for the toy optimizer");
  }
  if (optimizer.type == "http" && optimizer.endpoint.empty()) {
    throw ConfigError("optimizer.endpoint is required for an http optimizer");
  }
  if (!optimizer.faults.empty() &&
      optimizer.faults.size() != static_cast<std::size_t>(ensemble.num_variants)) {
    throw ConfigError("optimizer.faults must list one entry per variant");
  }
  for (const auto& variant : optimizer.faults) {
    for (const auto& f : variant) Fault::parse(f);
  }
  if (retry.max_retries < 0) throw ConfigError("retry.max_retries must be non-negative");
}

RunConfig run_config_from_json(const Json& doc, const fs::path& base) {
  RunConfig c;
  check_keys(doc, "config",
             {"mbr", "retrieval", "ensemble", "validation", "batch_size", "seed", "providers",
              "simulator_checks", "memory_store", "available_solvers", "retry", "max_in_flight",
              "run_dir"});
  if (doc.contains("mbr")) {
    const Json& m = doc["mbr"];
    check_keys(m, "mbr", {"num_candidates", "top_q", "weights"});
    read(m, "num_candidates", c.mbr.num_candidates, "mbr");
    read(m, "top_q", c.mbr.top_q, "mbr");
    if (m.contains("weights")) {
      c.mbr.weights.clear();
      read(m, "weights", c.mbr.weights, "mbr");
    }
  }
  if (doc.contains("retrieval")) {
    const Json& r = doc["retrieval"];
    check_keys(r, "retrieval", {"pool_size", "select_k", "lambda", "similarity_threshold"});
    read(r, "pool_size", c.retrieval.pool_size, "retrieval");
    read(r, "select_k", c.retrieval.select_k, "retrieval");
    read(r, "lambda", c.retrieval.lambda, "retrieval");
    read(r, "similarity_threshold", c.retrieval.similarity_threshold, "retrieval");
  }
  if (doc.contains("ensemble")) {
    const Json& e = doc["ensemble"];
    check_keys(e, "ensemble", {"num_variants", "rtol", "atol"});
    read(e, "num_variants", c.ensemble.num_variants, "ensemble");
    read(e, "rtol", c.ensemble.rtol, "ensemble");
    read(e, "atol", c.ensemble.atol, "ensemble");
  }
  if (doc.contains("validation")) {
    const Json& v = doc["validation"];
    check_keys(v, "validation", {"rtol", "atol", "max_iterations"});
    read(v, "rtol", c.validation.rtol, "validation");
    read(v, "atol", c.validation.atol, "validation");
    read(v, "max_iterations", c.validation.max_iterations, "validation");
  }
  read(doc, "batch_size", c.batch_size, "config");
  read(doc, "seed", c.seed, "config");
  read(doc, "max_in_flight", c.max_in_flight, "config");
  read(doc, "available_solvers", c.available_solvers, "config");
  read_path(doc, "simulator_checks", c.simulator_checks, base, "config");
  read_path(doc, "memory_store", c.memory_store, base, "config");
  read_path(doc, "run_dir", c.run_dir, base, "config");
  if (doc.contains("retry")) {
    const Json& r = doc["retry"];
    check_keys(r, "retry", {"max_retries", "initial_backoff_ms", "multiplier"});
    read(r, "max_retries", c.retry.max_retries, "retry");
    long long ms = c.retry.initial_backoff.count();
    read(r, "initial_backoff_ms", ms, "retry");
    c.retry.initial_backoff = std::chrono::milliseconds(ms);
    read(r, "multiplier", c.retry.multiplier, "retry");
  }
  if (doc.contains("providers")) {
    const Json& p = doc["providers"];
    check_keys(p, "providers", {"llm", "embedder", "optimizer"});
    if (p.contains("llm")) {
      const Json& l = p["llm"];
      check_keys(l, "providers.llm", {"type", "script", "endpoint", "model", "api_key_env"});
      read(l, "type", c.llm.type, "providers.llm");
      read_path(l, "script", c.llm.script, base, "providers.llm");
      read(l, "endpoint", c.llm.endpoint, "providers.llm");
      read(l, "model", c.llm.model, "providers.llm");
      read(l, "api_key_env", c.llm.api_key_env, "providers.llm");
    }
    if (p.contains("embedder")) {
      const Json& e = p["embedder"];
      check_keys(e, "providers.embedder", {"type", "dimension", "endpoint", "model", "api_key_env"});
      read(e, "type", c.embedder.type, "providers.embedder");
      read(e, "dimension", c.embedder.dimension, "providers.embedder");
      read(e, "endpoint", c.embedder.endpoint, "providers.embedder");
      read(e, "model", c.embedder.model, "providers.embedder");
      read(e, "api_key_env", c.embedder.api_key_env, "providers.embedder");
    }
    if (p.contains("optimizer")) {
      const Json& o = p["optimizer"];
      check_keys(o, "providers.optimizer",
                 {"type", "domain", "faults", "max_free_variables", "max_grid_points", "endpoint"});
      read(o, "type", c.optimizer.type, "providers.optimizer");
      read_path(o, "domain", c.optimizer.domain, base, "providers.optimizer");
      read(o, "faults", c.optimizer.faults, "providers.optimizer");
      read(o, "max_free_variables", c.optimizer.max_free_variables, "providers.optimizer");
      read(o, "max_grid_points", c.optimizer.max_grid_points, "providers.optimizer");
      read(o, "endpoint", c.optimizer.endpoint, "providers.optimizer");
    }
  }
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  Json doc;
  try {
    doc = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return run_config_from_json(doc, path.parent_path());
}

Json run_config_to_json(const RunConfig& c) {
  Json doc = Json::object();
  doc["mbr"] = Json{{"num_candidates", c.mbr.num_candidates}, {"top_q", c.mbr.top_q}, {"weights", c.mbr.weights}};
  doc["retrieval"] = Json{{"pool_size", c.retrieval.pool_size},
                          {"select_k", c.retrieval.select_k},
                          {"lambda", c.retrieval.lambda},
                          {"similarity_threshold", c.retrieval.similarity_threshold}};
  doc["ensemble"] = Json{{"num_variants", c.ensemble.num_variants}, {"rtol", c.ensemble.rtol}, {"atol", c.ensemble.atol}};
  doc["validation"] = Json{{"rtol", c.validation.rtol},
                           {"atol", c.validation.atol},
                           {"max_iterations", c.validation.max_iterations}};
  doc["batch_size"] = c.batch_size;
  doc["seed"] = c.seed;
  doc["providers"] = Json{
      {"llm", Json{{"type", c.llm.type},
                   {"script", path_text(c.llm.script)},
                   {"endpoint", c.llm.endpoint},
                   {"model", c.llm.model},
                   {"api_key_env", c.llm.api_key_env}}},
      {"embedder", Json{{"type", c.embedder.type},
                        {"dimension", c.embedder.dimension},
                        {"endpoint", c.embedder.endpoint},
                        {"model", c.embedder.model},
                        {"api_key_env", c.embedder.api_key_env}}},
      {"optimizer", Json{{"type", c.optimizer.type},
                         {"domain", path_text(c.optimizer.domain)},
                         {"faults", c.optimizer.faults},
                         {"max_free_variables", c.optimizer.max_free_variables},
                         {"max_grid_points", c.optimizer.max_grid_points},
                         {"endpoint", c.optimizer.endpoint}}}};
  doc["simulator_checks"] = path_text(c.simulator_checks);
  doc["memory_store"] = path_text(c.memory_store);
  doc["available_solvers"] = c.available_solvers;
  doc["retry"] = Json{{"max_retries", c.retry.max_retries},
                      {"initial_backoff_ms", c.retry.initial_backoff.count()},
                      {"multiplier", c.retry.multiplier}};
  doc["max_in_flight"] = c.max_in_flight;
  return doc;
}

void apply_env_overrides(RunConfig& cfg) {
  auto env = [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
  };
  if (auto v = env("EXECOPT_LLM_ENDPOINT")) {
    cfg.llm.endpoint = *v;
    cfg.llm.type = "openai";
  }
  if (auto v = env("EXECOPT_LLM_MODEL")) cfg.llm.model = *v;
  if (auto v = env("EXECOPT_EMBED_ENDPOINT")) {
    cfg.embedder.endpoint = *v;
    cfg.embedder.type = "openai";
  }
  if (auto v = env("EXECOPT_EMBED_MODEL")) cfg.embedder.model = *v;
  if (auto v = env("EXECOPT_AGENT_ENDPOINT")) {
    cfg.optimizer.endpoint = *v;
    cfg.optimizer.type = "http";
  }
}

}  // namespace execopt
