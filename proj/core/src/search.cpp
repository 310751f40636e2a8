#include "qmllab/search.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "json_detail.hpp"
#include "qmllab/errors.hpp"
#include "qmllab/models.hpp"
#include "qmllab/protocol.hpp"

namespace qml {

using detail::ojson;

namespace {

ojson candidate_to_ojson(const Candidate& c) {
  ojson j;
  j["id"] = c.id;
  j["generation"] = c.generation;
  if (c.parent_id) j["parent_id"] = *c.parent_id;
  j["spec"] = detail::spec_to_ojson(c.spec);
  j["train_config"] = detail::train_config_to_ojson(c.train_config);
  if (c.fitness) j["fitness"] = *c.fitness;
  j["failed"] = c.failed;
  j["note"] = c.note;
  return j;
}

}  // namespace

std::string candidate_to_json(const Candidate& candidate) {
  return candidate_to_ojson(candidate).dump();
}

Candidate candidate_from_json(const std::string& text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed candidate document: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("candidate must be a JSON object");
  static const char* const known[] = {"id",           "generation", "parent_id",
                                      "spec",         "train_config", "fitness",
                                      "failed",       "note"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ParseError("unknown candidate field: '" + key + "'");
  }
  Candidate c;
  c.id = detail::require_int(j, "id");
  c.generation = detail::require_int(j, "generation");
  if (c.generation < 0) throw ParseError("generation must be >= 0");
  if (j.contains("parent_id")) c.parent_id = detail::require_int(j, "parent_id");
  if (c.parent_id.has_value() != (c.generation > 0)) {
    throw ParseError("parent_id must be present exactly when generation > 0");
  }
  if (!j.contains("spec")) throw ParseError("missing candidate field: 'spec'");
  if (!j.contains("train_config")) {
    throw ParseError("missing candidate field: 'train_config'");
  }
  c.spec = detail::spec_from_ojson(j.at("spec"));
  c.train_config = detail::train_config_from_ojson(j.at("train_config"));
  if (j.contains("fitness")) {
    if (!j.at("fitness").is_number()) throw ParseError("fitness must be a number");
    const double f = j.at("fitness").get<double>();
    if (f < 0.0 || f > 1.0) throw ParseError("fitness must lie in [0, 1]");
    c.fitness = f;
  }
  if (j.contains("failed")) {
    if (!j.at("failed").is_boolean()) throw ParseError("failed must be a boolean");
    c.failed = j.at("failed").get<bool>();
  }
  if (j.contains("note")) {
    if (!j.at("note").is_string()) throw ParseError("note must be a string");
    c.note = j.at("note").get<std::string>();
  }
  return c;
}

AgentTopology default_topology() {
  AgentTopology topology;
  topology.agents = {{"generator", "qml-generator-v1"}, {"critic", "qml-critic-v1"}};
  topology.interaction = {{1.0, 0.5}, {0.0, 1.0}};
  return topology;
}

void validate_topology(const AgentTopology& topology) {
  if (topology.agents.empty()) throw ConfigError("topology needs at least one agent");
  if (topology.interaction.size() != topology.agents.size()) {
    throw ConfigError("interaction matrix side must equal the agent count");
  }
  for (const auto& row : topology.interaction) {
    if (row.size() != topology.agents.size()) {
      throw ConfigError("interaction matrix must be square");
    }
    for (double a : row) {
      if (!(a >= 0.0)) throw ConfigError("interaction weights must be non-negative");
    }
  }
}

TrainConfig short_eval_budget(std::uint64_t seed) {
  TrainConfig budget;
  budget.epochs = 3;
  budget.batch_size = 16;
  budget.learning_rate = 0.01;
  budget.optimizer = OptimizerKind::Adam;
  budget.seed = seed;
  budget.shuffle = true;
  return budget;
}

void validate_search_config(const SearchConfig& config) {
  if (config.generations < 1) throw ConfigError("generations must be >= 1");
  if (config.population < 1) throw ConfigError("population must be >= 1");
  if (config.elite_count < 1 || config.elite_count >= config.population) {
    throw ConfigError("elite_count must satisfy 1 <= elite_count < population");
  }
  validate_train_config(config.eval_budget);
  if (config.generator == GeneratorKind::Remote) {
    if (config.endpoint.empty()) {
      throw ConfigError("remote generator needs an endpoint");
    }
    validate_topology(config.topology);
  }
}

Candidate& Archive::add(Candidate candidate) {
  const int id = candidate.id;
  auto [it, inserted] = by_id_.emplace(id, std::move(candidate));
  if (!inserted) {
    throw StateError("candidate id " + std::to_string(id) + " already archived");
  }
  return it->second;
}

const Candidate* Archive::find(int id) const {
  const auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &it->second;
}

Candidate* Archive::find(int id) {
  const auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &it->second;
}

std::string Archive::dedup_key(const ModelSpec& spec, const TrainConfig& budget) {
  return canonical_spec(spec) + "|" + canonical_train_config(budget);
}

const Candidate* Archive::find_evaluated(const std::string& key) const {
  const auto it = evaluated_.find(key);
  return it == evaluated_.end() ? nullptr : find(it->second);
}

void Archive::index_evaluated(const Candidate& candidate) {
  evaluated_.emplace(dedup_key(candidate.spec, candidate.train_config), candidate.id);
}

std::vector<const Candidate*> Archive::ranked() const {
  std::vector<const Candidate*> out;
  for (const auto& [id, candidate] : by_id_) {
    if (candidate.fitness) out.push_back(&candidate);
  }
  std::sort(out.begin(), out.end(), [](const Candidate* a, const Candidate* b) {
    if (*a->fitness != *b->fitness) return *a->fitness > *b->fitness;
    return a->id < b->id;
  });
  return out;
}

std::string Archive::to_jsonl() const {
  std::string out;
  for (const auto& [id, candidate] : by_id_) {
    (void)id;
    out += candidate_to_json(candidate);
    out += '\n';
  }
  return out;
}

namespace {

int clamp_int(int value, int lo, int hi) { return std::min(hi, std::max(lo, value)); }

double clamp_double(double value, double lo, double hi) {
  return std::min(hi, std::max(lo, value));
}

}  // namespace

ModelSpec mutate(const ModelSpec& spec, Rng& rng) {
  validate_spec(spec);
  ModelSpec out = spec;

  enum Move { Depth, Qubits, Width, Threshold, Kind };
  std::vector<Move> applicable = {Depth, Qubits, Threshold, Kind};
  if (!spec.classical_widths.empty()) applicable.push_back(Width);

  switch (applicable[rng.uniform_int(applicable.size())]) {
    case Depth: {
      const int delta = rng.uniform_int(2) == 0 ? 1 : -1;
      out.ansatz_depth = clamp_int(spec.ansatz_depth + delta, 1, 4);
      break;
    }
    case Qubits: {
      const int delta = rng.uniform_int(2) == 0 ? 1 : -1;
      out.num_qubits = clamp_int(spec.num_qubits + delta, 4, 10);
      break;
    }
    case Width: {
      const std::size_t i = rng.uniform_int(spec.classical_widths.size());
      const bool grow = rng.uniform_int(2) == 0;
      const int w = spec.classical_widths[i];
      out.classical_widths[i] = clamp_int(grow ? w * 2 : w / 2, 4, 64);
      break;
    }
    case Threshold: {
      const bool grow = rng.uniform_int(2) == 0;
      out.ff_threshold =
          clamp_double(grow ? spec.ff_threshold * 1.5 : spec.ff_threshold / 1.5,
                       0.25, 8.0);
      break;
    }
    case Kind: {
      static constexpr ModelKind toggles[] = {ModelKind::QMLP, ModelKind::QFF,
                                              ModelKind::QBP};
      std::vector<ModelKind> choices;
      for (ModelKind k : toggles) {
        if (k != spec.kind) choices.push_back(k);
      }
      out.kind = choices[rng.uniform_int(choices.size())];
      break;
    }
  }
  validate_spec(out);
  return out;
}

GeneratedSpec ScriptedMutationGenerator::generate(
    const Archive&, std::span<const Candidate* const> elites, Rng& rng) {
  if (elites.empty()) throw StateError("no elites to mutate");
  const Candidate* parent = elites[rng.uniform_int(elites.size())];
  return {mutate(parent->spec, rng), parent->id};
}

double evaluate_candidate(Candidate& candidate, const DatasetSplit& split,
                          Archive& archive) {
  if (candidate.fitness) {
    throw StateError("candidate " + std::to_string(candidate.id) +
                     " already has a fitness");
  }
  const std::string key = Archive::dedup_key(candidate.spec, candidate.train_config);
  if (const Candidate* prior = archive.find_evaluated(key)) {
    candidate.fitness = prior->fitness;
    candidate.failed = prior->failed;
    candidate.note = "reused evaluation of candidate " + std::to_string(prior->id);
    return *candidate.fitness;
  }
  try {
    std::unique_ptr<Model> model = build_model(candidate.spec);
    const TrainReport report = train(*model, split, candidate.train_config);
    candidate.fitness = report.final_test_accuracy;
  } catch (const std::exception& e) {
    candidate.failed = true;
    candidate.fitness = 0.0;
    candidate.note = std::string("evaluation failed: ") + e.what();
  }
  archive.index_evaluated(candidate);
  return *candidate.fitness;
}

namespace {

std::vector<const Candidate*> rank_population(const Archive& archive,
                                              const std::vector<int>& population) {
  std::vector<const Candidate*> ranked;
  ranked.reserve(population.size());
  for (int id : population) ranked.push_back(archive.find(id));
  std::sort(ranked.begin(), ranked.end(), [](const Candidate* a, const Candidate* b) {
    const double fa = a->fitness.value_or(0.0);
    const double fb = b->fitness.value_or(0.0);
    if (fa != fb) return fa > fb;
    return a->id < b->id;
  });
  return ranked;
}

}  // namespace

EvolveResult evolve(const SearchConfig& config, const DatasetSplit& split,
                    SpecGenerator* generator) {
  validate_search_config(config);
  if (split.train.empty() || split.test.empty()) {
    throw InputError("evolve needs a valid dataset split");
  }

  ScriptedMutationGenerator scripted;
  std::unique_ptr<RemoteGenerator> remote;
  if (generator == nullptr) {
    if (config.generator == GeneratorKind::Remote) {
      remote = std::make_unique<RemoteGenerator>(config.endpoint, config.topology,
                                                 config.elite_count);
      generator = remote.get();
    } else {
      generator = &scripted;
    }
  }
  const bool generator_is_scripted = generator == &scripted;

  Rng rng(config.seed);
  Archive archive;
  int next_id = 0;
  std::vector<int> population;

  // Generation 0: one default per kind, then mutants of those defaults.
  static constexpr ModelKind seed_kinds[] = {ModelKind::QMLP, ModelKind::QFF,
                                             ModelKind::QBP, ModelKind::BaselineQNN};
  std::vector<int> seeded;
  for (ModelKind kind : seed_kinds) {
    if (static_cast<int>(population.size()) >= config.population) break;
    Candidate c;
    c.id = next_id++;
    c.spec = default_spec(kind, config.seed);
    c.train_config = config.eval_budget;
    c.generation = 0;
    population.push_back(archive.add(std::move(c)).id);
    seeded.push_back(population.back());
  }
  while (static_cast<int>(population.size()) < config.population) {
    const Candidate* parent =
        archive.find(static_cast<int>(seeded[rng.uniform_int(seeded.size())]));
    Candidate c;
    c.id = next_id++;
    c.spec = mutate(parent->spec, rng);
    c.train_config = config.eval_budget;
    c.parent_id = parent->id;
    c.generation = 0;
    population.push_back(archive.add(std::move(c)).id);
  }

  int consecutive_failures = 0;
  bool fallen_back = false;

  for (int gen = 0; gen < config.generations; ++gen) {
    for (int id : population) {
      Candidate* candidate = archive.find(id);
      if (!candidate->fitness) evaluate_candidate(*candidate, split, archive);
    }
    const std::vector<const Candidate*> ranked = rank_population(archive, population);
    archive.best_per_generation.push_back(ranked.front()->fitness.value_or(0.0));

    if (gen + 1 == config.generations) break;

    std::vector<const Candidate*> elites(
        ranked.begin(), ranked.begin() + static_cast<std::size_t>(config.elite_count));
    std::vector<int> next_population;
    for (const Candidate* elite : elites) next_population.push_back(elite->id);

    while (static_cast<int>(next_population.size()) < config.population) {
      GeneratedSpec produced;
      bool have_spec = false;
      if (!fallen_back && !generator_is_scripted) {
        try {
          produced = generator->generate(archive, elites, rng);
          consecutive_failures = 0;
          have_spec = true;
        } catch (const std::exception& e) {
          ++consecutive_failures;
          archive.notes.push_back("generation " + std::to_string(gen + 1) +
                                  ": generator failure: " + e.what());
          if (consecutive_failures >= 3) {
            fallen_back = true;
            archive.notes.push_back(
                "generator failed 3 times in a row; using scripted mutation "
                "for the remainder of the run");
          }
        }
      }
      if (!have_spec) produced = scripted.generate(archive, elites, rng);

      Candidate c;
      c.id = next_id++;
      c.spec = std::move(produced.spec);
      c.train_config = config.eval_budget;
      c.parent_id = produced.parent_id ? produced.parent_id
                                       : std::optional<int>(elites.front()->id);
      c.generation = gen + 1;
      next_population.push_back(archive.add(std::move(c)).id);
    }
    population = std::move(next_population);
  }

  EvolveResult result;
  result.best = *archive.ranked().front();
  result.archive = std::move(archive);
  return result;
}

EvolveResult evolve(const SearchConfig& config, const DatasetSplit& split) {
  return evolve(config, split, nullptr);
}

}  // namespace qml
