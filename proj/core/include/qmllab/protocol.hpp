#pragma once

#include <string>
#include <vector>

#include "qmllab/search.hpp"

namespace qml {

// Wire documents of the remote-generator protocol. Field names are fixed
// in PROTOCOL.md; both sides parse strictly (unknown fields rejected).

struct GeneratorRequest {
  struct ScoredSpec {
    ModelSpec spec;
    double fitness = 0.0;
  };
  std::vector<ScoredSpec> top_k;  // fitness descending, ties by id ascending
  std::vector<AgentTopology::Agent> agents;
  std::vector<double> alpha_row;  // composing agent's interaction row
};

std::string request_to_json(const GeneratorRequest& request, bool pretty = false);
GeneratorRequest parse_generator_request(const std::string& document);

// Builds the request for one refill slot from the archive's current top-k.
// Throws StateError when the archive holds no evaluated candidate.
std::string compose_generator_request(const Archive& archive,
                                      const AgentTopology& topology, int top_k);

// Parses {"spec": {...}}; every model-spec invariant is enforced.
ModelSpec parse_generator_response(const std::string& document);
std::string response_to_json(const ModelSpec& spec, bool pretty = false);

// POSTs one request per generate() call to an HTTP endpoint.
class RemoteGenerator final : public SpecGenerator {
 public:
  RemoteGenerator(std::string endpoint, AgentTopology topology, int top_k,
                  double timeout_seconds = 5.0);

  GeneratedSpec generate(const Archive& archive,
                         std::span<const Candidate* const> elites,
                         Rng& rng) override;

 private:
  std::string endpoint_;
  AgentTopology topology_;
  int top_k_;
  double timeout_seconds_;
};

}  // namespace qml
