#pragma once

#include <initializer_list>
#include <string>

#include "json.hpp"

#include "ecfc/trainer.hpp"

namespace ecfc {

using Json = nlohmann::json;

Json to_json(const TrainConfig& config);

// Missing keys keep their defaults; unknown keys are a ConfigError unless
// listed in `extra_keys` (used by documents that embed a training config).
TrainConfig train_config_from_json(const Json& doc, std::initializer_list<std::string> extra_keys = {});

Json to_json(const Normalizer& normalizer);
Normalizer normalizer_from_json(const Json& doc);

Json to_json(const EpochRecord& record);
EpochRecord epoch_record_from_json(const Json& doc);

}  // namespace ecfc
