#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "execopt/http_providers.hpp"

#include "httplib.h"

#include "execopt/errors.hpp"

namespace execopt {

HttpEndpoint HttpEndpoint::parse(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) throw ConfigError("endpoint '" + std::string(url) + "' has no scheme");
  const std::string_view scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw ConfigError("endpoint '" + std::string(url) + "' must use http or https");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  HttpEndpoint e;
  if (path_start == std::string_view::npos) {
    e.base = std::string(url);
    e.path = "/";
  } else {
    e.base = std::string(url.substr(0, path_start));
    e.path = std::string(url.substr(path_start));
  }
  if (e.base.size() == scheme_end + 3) throw ConfigError("endpoint '" + std::string(url) + "' has no host");
  return e;
}

namespace {

Json post_json(const HttpEndpoint& ep, const HttpSettings& s, const Json& body, std::string_view what) {
  httplib::Client client(ep.base);
  client.set_connection_timeout(std::chrono::seconds(10));
  client.set_read_timeout(s.timeout);
  client.set_write_timeout(s.timeout);
  httplib::Headers headers;
  if (!s.api_key.empty()) headers.emplace("Authorization", "Bearer " + s.api_key);
  auto res = client.Post(ep.path, headers, body.dump(), "application/json");
  if (!res) {
    throw ProviderUnavailable(std::string(what) + ": " + httplib::to_string(res.error()));
  }
  if (res->status == 429) throw RateLimited(std::string(what) + ": rate limited");
  if (res->status >= 500) {
    throw ProviderUnavailable(std::string(what) + ": HTTP " + std::to_string(res->status));
  }
  if (res->status < 200 || res->status >= 300) {
    throw ProviderError(std::string(what) + ": HTTP " + std::to_string(res->status) + ": " +
                        res->body.substr(0, 200));
  }
  try {
    return Json::parse(res->body);
  } catch (const Json::parse_error& e) {
    throw ContractViolation(std::string(what) + ": reply is not JSON: " + e.what());
  }
}

}  // namespace

OpenAiChatLlm::OpenAiChatLlm(HttpSettings s)
    : settings_(std::move(s)), endpoint_(HttpEndpoint::parse(settings_.url)) {}

std::string OpenAiChatLlm::complete(const ProviderRequest& request) {
  if (request.prompt.empty()) throw ContractViolation("empty prompt");
  std::string content = request.prompt;
  for (const auto& a : request.attachments) content += "\n\n--- " + a.name + " ---\n" + a.content;
  Json body = {{"model", settings_.model},
               {"temperature", 0},
               {"messages", Json::array({Json{{"role", "user"}, {"content", content}}})}};
  const Json reply = post_json(endpoint_, settings_, body, "chat completion");
  try {
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const Json::exception& e) {
    throw ContractViolation(std::string("chat completion reply: ") + e.what());
  }
}

OpenAiEmbedder::OpenAiEmbedder(HttpSettings s, std::size_t dimension)
    : settings_(std::move(s)), endpoint_(HttpEndpoint::parse(settings_.url)), dimension_(dimension) {}

std::vector<Embedding> OpenAiEmbedder::embed(std::span<const std::string> texts) {
  if (texts.empty()) throw ProviderError("empty embedding batch");
  Json input = Json::array();
  for (const auto& t : texts) input.push_back(t);
  const Json reply = post_json(endpoint_, settings_, Json{{"model", settings_.model}, {"input", input}},
                               "embedding");
  std::vector<Embedding> out(texts.size());
  try {
    const Json& data = reply.at("data");
    if (data.size() != texts.size()) throw ContractViolation("embedding reply has the wrong length");
    for (std::size_t i = 0; i < data.size(); ++i) {
      const std::size_t slot = data[i].contains("index") ? data[i]["index"].get<std::size_t>() : i;
      if (slot >= out.size()) throw ContractViolation("embedding reply index out of range");
      out[slot] = data[i].at("embedding").get<Embedding>();
      if (out[slot].size() != dimension_) {
        throw DimensionMismatch("embedding has dimension " + std::to_string(out[slot].size()) +
                                ", expected " + std::to_string(dimension_));
      }
    }
  } catch (const Json::exception& e) {
    throw ContractViolation(std::string("embedding reply: ") + e.what());
  }
  return out;
}

Json optimizer_task_to_json(const OptimizerTask& task) {
  Json examples = Json::array();
  for (const auto& e : task.examples) examples.push_back(Json{{"name", e.name}, {"content", e.content}});
  Json doc = {{"run_id", task.run_id},
              {"variant_name", task.variant_name},
              {"variant_index", task.variant_index},
              {"iteration", task.iteration},
              {"decision_process", decision_process_to_json(task.process)},
              {"ranked_solvers", task.ranked_solvers},
              {"examples", examples},
              {"prompt", render_optimizer_prompt(task)}};
  doc["feedback"] = task.feedback ? *task.feedback : Json(nullptr);
  return doc;
}

HttpOptimizerDriver::HttpOptimizerDriver(HttpSettings s)
    : settings_(std::move(s)), endpoint_(HttpEndpoint::parse(settings_.url)) {}

DriverOutput HttpOptimizerDriver::run(const OptimizerTask& task) {
  const Json reply = post_json(endpoint_, settings_, optimizer_task_to_json(task), "optimizer agent");
  return driver_output_from_json(reply, task.variant_name);
}

}  // namespace execopt
