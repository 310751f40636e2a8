#pragma once

// Internal JSON glue shared by the serialization translation units; not
// part of the installed surface.

#include "json.hpp"
#include "qmllab/model_spec.hpp"
#include "qmllab/training.hpp"

namespace qml::detail {

using ojson = nlohmann::ordered_json;

ojson spec_to_ojson(const ModelSpec& spec);
ModelSpec spec_from_ojson(const ojson& j);
int require_int(const ojson& j, const char* key);

ojson train_config_to_ojson(const TrainConfig& config);
TrainConfig train_config_from_ojson(const ojson& j);

}  // namespace qml::detail
