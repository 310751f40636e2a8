#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qmllab/data.hpp"
#include "qmllab/model_spec.hpp"
#include "qmllab/rng.hpp"
#include "qmllab/training.hpp"

namespace qml {

// One point of the evolution loop: a spec, the budget it is scored under,
// and its measured fitness (test accuracy).
struct Candidate {
  int id = 0;
  ModelSpec spec;
  TrainConfig train_config;
  std::optional<double> fitness;
  std::optional<int> parent_id;  // absent iff generation 0
  int generation = 0;
  bool failed = false;
  std::string note;
};

std::string candidate_to_json(const Candidate& candidate);
Candidate candidate_from_json(const std::string& text);  // strict

// Weighted interaction structure among the remote agents. The artifact
// transports it verbatim; agent 0 is the composing agent whose alpha row
// rides along in every generator request.
struct AgentTopology {
  struct Agent {
    std::string role;
    std::string template_id;
  };
  std::vector<Agent> agents;
  std::vector<std::vector<double>> interaction;  // alpha_ij, square
};

AgentTopology default_topology();
void validate_topology(const AgentTopology& topology);  // throws ConfigError

enum class GeneratorKind { ScriptedMutation, Remote };

// Short training budget used to score candidates.
TrainConfig short_eval_budget(std::uint64_t seed);

struct SearchConfig {
  int population = 6;
  int generations = 3;
  int elite_count = 2;
  std::uint64_t seed = 1;
  GeneratorKind generator = GeneratorKind::ScriptedMutation;
  std::string endpoint;  // Remote only, e.g. http://127.0.0.1:8080/generate
  TrainConfig eval_budget = short_eval_budget(1);
  AgentTopology topology = default_topology();
};

void validate_search_config(const SearchConfig& config);

// The loop's memory: every created candidate keyed by id, plus a dedup
// index so identical (spec, budget) pairs share one evaluation.
class Archive {
 public:
  Candidate& add(Candidate candidate);  // id must be fresh
  const Candidate* find(int id) const;
  Candidate* find(int id);
  std::size_t size() const { return by_id_.size(); }
  const std::map<int, Candidate>& all() const { return by_id_; }

  static std::string dedup_key(const ModelSpec& spec, const TrainConfig& budget);
  const Candidate* find_evaluated(const std::string& key) const;
  void index_evaluated(const Candidate& candidate);

  // Evaluated candidates sorted by fitness descending, ties by id ascending.
  std::vector<const Candidate*> ranked() const;

  // One canonical JSON document per candidate in id order.
  std::string to_jsonl() const;

  std::vector<double> best_per_generation;
  std::vector<std::string> notes;

 private:
  std::map<int, Candidate> by_id_;
  std::map<std::string, int> evaluated_;
};

// Perturbs exactly one field: ansatz_depth +/-1 in [1,4], num_qubits +/-1
// in [4,10], one classical width x2 or /2 in [4,64], ff_threshold x1.5 or
// /1.5 in [0.25,8], or the kind re-drawn within {QMLP, QFF, QBP}.
ModelSpec mutate(const ModelSpec& spec, Rng& rng);

struct GeneratedSpec {
  ModelSpec spec;
  std::optional<int> parent_id;
};

// Strategy for refilling a population from the current elites. generate()
// may throw; evolve counts consecutive failures and falls back to scripted
// mutation after three of them.
class SpecGenerator {
 public:
  virtual ~SpecGenerator() = default;
  virtual GeneratedSpec generate(const Archive& archive,
                                 std::span<const Candidate* const> elites,
                                 Rng& rng) = 0;
};

class ScriptedMutationGenerator final : public SpecGenerator {
 public:
  GeneratedSpec generate(const Archive& archive,
                         std::span<const Candidate* const> elites,
                         Rng& rng) override;
};

// Builds, trains under the candidate's budget, and scores on the test
// partition. Identical (spec, budget) pairs reuse the archived fitness.
// Any model/training failure marks the candidate failed with fitness 0.
double evaluate_candidate(Candidate& candidate, const DatasetSplit& split,
                          Archive& archive);

struct EvolveResult {
  Candidate best;
  Archive archive;
};

// generate -> evaluate -> select -> refine. Generation 0 holds one default
// spec per kind in {QMLP, QFF, QBP, BaselineQNN} plus mutants up to the
// population size; each later generation keeps the elite_count best and
// refills from them via the generator.
EvolveResult evolve(const SearchConfig& config, const DatasetSplit& split);

// Test seam: run with an injected generator instead of the configured one.
EvolveResult evolve(const SearchConfig& config, const DatasetSplit& split,
                    SpecGenerator* generator);

}  // namespace qml
