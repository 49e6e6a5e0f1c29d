#include <algorithm>

#include "cotprompt/config.hpp"
#include "cotprompt/errors.hpp"
#include "cotprompt/model.hpp"

namespace cotprompt {
namespace {

constexpr const char* kFormat = "cotprompt-checkpoint";
constexpr int kVersion = 1;

}  // namespace

std::string checkpoint_to_string(const CotModel& model) {
    Json model_json = to_json(model.config());
    model_json["seed"] = model.config().seed;
    Json tensors = Json::array();
    for (const auto& p : model.parameters()) {
        Json t;
        t["name"] = p.name;
        t["shape"] = p.tensor->shape();
        t["data"] = std::vector<double>(p.tensor->data().begin(), p.tensor->data().end());
        tensors.push_back(std::move(t));
    }
    Json j{{"format", kFormat},
           {"version", kVersion},
           {"model", std::move(model_json)},
           {"encoders", to_json(model.encoder_spec())},
           {"vocabulary", to_json(model.vocabulary_spec())},
           {"frozen_hash", model.frozen_hash()},
           {"tensors", std::move(tensors)}};
    return j.dump(1) + "\n";
}

CotModel checkpoint_from_string(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError(std::string("checkpoint is not valid JSON: ") + e.what());
    }
    if (!j.is_object() || j.value("format", "") != kFormat) throw IoError("not a cotprompt checkpoint");
    if (j.value("version", 0) != kVersion)
        throw IoError("unsupported checkpoint version " + j.value("version", Json(0)).dump());
    try {
        Json model_json = j.at("model");
        const std::uint64_t seed = model_json.at("seed").get<std::uint64_t>();
        model_json.erase("seed");
        ModelConfig config = model_config_from_json(model_json);
        config.seed = seed;
        CotModel model = CotModel::build(config, encoder_spec_from_json(j.at("encoders")),
                                         vocabulary_spec_from_json(j.at("vocabulary")));
        if (model.frozen_hash() != j.at("frozen_hash").get<std::uint64_t>())
            throw IoError("checkpoint frozen hash does not match the rebuilt encoders and vocabulary");

        auto params = model.parameters();
        const Json& tensors = j.at("tensors");
        if (tensors.size() != params.size())
            throw IoError("checkpoint has " + std::to_string(tensors.size()) + " tensors, model expects " +
                          std::to_string(params.size()));
        for (std::size_t i = 0; i < params.size(); ++i) {
            const Json& t = tensors[i];
            if (t.at("name").get<std::string>() != params[i].name)
                throw IoError("checkpoint tensor " + std::to_string(i) + " is '" + t.at("name").get<std::string>() +
                              "', expected '" + params[i].name + "'");
            if (t.at("shape").get<Shape>() != params[i].tensor->shape())
                throw IoError("checkpoint tensor '" + params[i].name + "' has the wrong shape");
            const auto data = t.at("data").get<std::vector<double>>();
            if (data.size() != params[i].tensor->size())
                throw IoError("checkpoint tensor '" + params[i].name + "' has the wrong length");
            std::copy(data.begin(), data.end(), params[i].tensor->data().begin());
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed checkpoint: ") + e.what());
    }
}

void save_checkpoint(const CotModel& model, const std::string& path) { write_file(path, checkpoint_to_string(model)); }

CotModel load_checkpoint(const std::string& path) { return checkpoint_from_string(read_file(path)); }

}  // namespace cotprompt
