#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"

#include "cotprompt/metrics.hpp"
#include "cotprompt/model.hpp"
#include "cotprompt/sgd.hpp"
#include "cotprompt/task.hpp"

namespace cotprompt {

using Json = nlohmann::ordered_json;

// Everything that determines a run. `seed` drives trainable initialization
// and epoch shuffling; the encoder and task sections carry their own seeds.
struct ExperimentConfig {
    std::uint64_t seed = 1;
    EncoderSpec encoders;
    ModelConfig model;
    SgdConfig optimizer;
    TaskSpec task;
    Protocol evaluation;
    std::string output_directory = "runs/default";

    // Model config with the run seed applied.
    ModelConfig model_config() const;
    void validate() const;
    // FNV-1a over the canonical JSON, output section excluded.
    std::uint64_t hash() const;
};

// JSON mapping. Readers reject unknown keys and wrong types with ConfigError;
// missing keys keep their defaults.
Json to_json(const EncoderSpec& spec);
Json to_json(const ModelConfig& config);  // seed not included
Json to_json(const VocabularySpec& spec);
Json to_json(const SgdConfig& config);
Json to_json(const TaskSpec& spec);
Json to_json(const ShiftSpec& spec);
Json to_json(const Protocol& protocol);
Json to_json(const ExperimentConfig& config);

EncoderSpec encoder_spec_from_json(const Json& j);
ModelConfig model_config_from_json(const Json& j);
VocabularySpec vocabulary_spec_from_json(const Json& j);
SgdConfig sgd_config_from_json(const Json& j);
TaskSpec task_spec_from_json(const Json& j);
ShiftSpec shift_spec_from_json(const Json& j);
Protocol protocol_from_json(const Json& j);
ExperimentConfig experiment_config_from_json(const Json& j);

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace cotprompt
