#pragma once

#include "modcomp/lora.hpp"
#include "modcomp/model.hpp"
#include "modcomp/optimizer.hpp"
#include "modcomp/trainer.hpp"

#include <nlohmann/json.hpp>

namespace modcomp {

// ADL (de)serializers so configs embed naturally in larger documents.
void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

void to_json(nlohmann::json& j, const OptimizerConfig& c);
void from_json(const nlohmann::json& j, OptimizerConfig& c);

void to_json(nlohmann::json& j, const AdapterConfig& c);
void from_json(const nlohmann::json& j, AdapterConfig& c);

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

}  // namespace modcomp
