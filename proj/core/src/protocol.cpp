#include "qmllab/protocol.hpp"

#include <algorithm>
#include <chrono>
#include <string>

#include "httplib.h"
#include "json_detail.hpp"
#include "qmllab/errors.hpp"

namespace qml {

using detail::ojson;

namespace {

ojson request_to_ojson(const GeneratorRequest& request) {
  ojson j;
  j["top_k"] = ojson::array();
  for (const auto& scored : request.top_k) {
    ojson entry;
    entry["spec"] = detail::spec_to_ojson(scored.spec);
    entry["fitness"] = scored.fitness;
    j["top_k"].push_back(std::move(entry));
  }
  j["agents"] = ojson::array();
  for (const auto& agent : request.agents) {
    ojson entry;
    entry["role"] = agent.role;
    entry["template_id"] = agent.template_id;
    j["agents"].push_back(std::move(entry));
  }
  j["alpha_row"] = request.alpha_row;
  return j;
}

void check_known_fields(const ojson& j, std::span<const char* const> known,
                        const char* what) {
  if (!j.is_object()) throw ParseError(std::string(what) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) {
      throw ParseError(std::string("unknown ") + what + " field: '" + key + "'");
    }
  }
  for (const char* k : known) {
    if (!j.contains(k)) {
      throw ParseError(std::string("missing ") + what + " field: '" + k + "'");
    }
  }
}

}  // namespace

std::string request_to_json(const GeneratorRequest& request, bool pretty) {
  return request_to_ojson(request).dump(pretty ? 2 : -1);
}

GeneratorRequest parse_generator_request(const std::string& document) {
  ojson j;
  try {
    j = ojson::parse(document);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed generator request: ") + e.what());
  }
  static const char* const known[] = {"top_k", "agents", "alpha_row"};
  check_known_fields(j, known, "generator request");

  GeneratorRequest request;
  if (!j.at("top_k").is_array()) throw ParseError("top_k must be an array");
  for (const auto& entry : j.at("top_k")) {
    static const char* const entry_keys[] = {"spec", "fitness"};
    check_known_fields(entry, entry_keys, "top_k entry");
    if (!entry.at("fitness").is_number()) {
      throw ParseError("top_k fitness must be a number");
    }
    request.top_k.push_back(
        {detail::spec_from_ojson(entry.at("spec")), entry.at("fitness").get<double>()});
  }
  if (!j.at("agents").is_array()) throw ParseError("agents must be an array");
  for (const auto& entry : j.at("agents")) {
    static const char* const agent_keys[] = {"role", "template_id"};
    check_known_fields(entry, agent_keys, "agent");
    if (!entry.at("role").is_string() || !entry.at("template_id").is_string()) {
      throw ParseError("agent role and template_id must be strings");
    }
    request.agents.push_back({entry.at("role").get<std::string>(),
                              entry.at("template_id").get<std::string>()});
  }
  if (!j.at("alpha_row").is_array()) throw ParseError("alpha_row must be an array");
  for (const auto& v : j.at("alpha_row")) {
    if (!v.is_number()) throw ParseError("alpha_row entries must be numbers");
    request.alpha_row.push_back(v.get<double>());
  }
  return request;
}

std::string compose_generator_request(const Archive& archive,
                                      const AgentTopology& topology, int top_k) {
  validate_topology(topology);
  const std::vector<const Candidate*> ranked = archive.ranked();
  if (ranked.empty()) {
    throw StateError("cannot compose a generator request from an empty archive");
  }
  GeneratorRequest request;
  const std::size_t take = std::min<std::size_t>(ranked.size(),
                                                 top_k < 0 ? 0 : static_cast<std::size_t>(top_k));
  for (std::size_t i = 0; i < take; ++i) {
    request.top_k.push_back({ranked[i]->spec, ranked[i]->fitness.value_or(0.0)});
  }
  request.agents = topology.agents;
  request.alpha_row = topology.interaction.front();
  return request_to_json(request);
}

ModelSpec parse_generator_response(const std::string& document) {
  ojson j;
  try {
    j = ojson::parse(document);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed generator response: ") + e.what());
  }
  static const char* const known[] = {"spec"};
  check_known_fields(j, known, "generator response");
  return detail::spec_from_ojson(j.at("spec"));
}

std::string response_to_json(const ModelSpec& spec, bool pretty) {
  ojson j;
  j["spec"] = detail::spec_to_ojson(spec);
  return j.dump(pretty ? 2 : -1);
}

RemoteGenerator::RemoteGenerator(std::string endpoint, AgentTopology topology,
                                 int top_k, double timeout_seconds)
    : endpoint_(std::move(endpoint)),
      topology_(std::move(topology)),
      top_k_(top_k),
      timeout_seconds_(timeout_seconds) {
  validate_topology(topology_);
}

GeneratedSpec RemoteGenerator::generate(const Archive& archive,
                                        std::span<const Candidate* const> elites,
                                        Rng&) {
  if (elites.empty()) throw StateError("no elites to prompt the generator with");
  const std::string body = compose_generator_request(archive, topology_, top_k_);

  // Split "http://host:port/path" into base and path.
  std::string base = endpoint_;
  std::string path = "/";
  const std::size_t scheme = endpoint_.find("://");
  const std::size_t host_start = scheme == std::string::npos ? 0 : scheme + 3;
  const std::size_t slash = endpoint_.find('/', host_start);
  if (slash != std::string::npos) {
    base = endpoint_.substr(0, slash);
    path = endpoint_.substr(slash);
  }

  httplib::Client client(base);
  const auto connect_timeout =
      std::chrono::milliseconds(static_cast<long>(timeout_seconds_ * 1000));
  client.set_connection_timeout(connect_timeout);
  client.set_read_timeout(connect_timeout);
  client.set_write_timeout(connect_timeout);

  httplib::Result result = client.Post(path, body, "application/json");
  if (!result) {
    throw Error("generator endpoint unreachable: " + endpoint_ + " (" +
                httplib::to_string(result.error()) + ")");
  }
  if (result->status != 200) {
    throw Error("generator endpoint returned HTTP " + std::to_string(result->status));
  }
  return {parse_generator_response(result->body), std::nullopt};
}

}  // namespace qml
