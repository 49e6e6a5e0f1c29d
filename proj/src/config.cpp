#include "cotprompt/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "cotprompt/errors.hpp"
#include "cotprompt/random.hpp"

namespace cotprompt {
namespace {

// Reads fields off a JSON object and rejects keys nobody asked for.
class Fields {
public:
    Fields(const Json& j, std::string section) : j_(j), section_(std::move(section)) {
        if (!j_.is_object()) throw ConfigError(section_ + ": expected an object");
    }

    template <typename T>
    void read(const char* key, T& out) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            if constexpr (std::is_same_v<T, bool>) {
                if (!it->is_boolean()) throw ConfigError("");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!it->is_string()) throw ConfigError("");
            } else if constexpr (std::is_floating_point_v<T>) {
                if (!it->is_number()) throw ConfigError("");
            } else if constexpr (std::is_integral_v<T>) {
                if (!it->is_number_unsigned()) throw ConfigError("");
            }
            out = it->template get<T>();
        } catch (const std::exception&) {
            throw ConfigError(section_ + "." + key + ": wrong type");
        }
    }

    const Json* object(const char* key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(section_ + ": unknown key '" + it.key() + "'");
    }

private:
    const Json& j_;
    std::string section_;
    std::set<std::string> seen_;
};

}  // namespace

ModelConfig ExperimentConfig::model_config() const {
    ModelConfig m = model;
    m.seed = seed;
    return m;
}

void ExperimentConfig::validate() const {
    encoders.dims.validate();
    model_config().validate();
    optimizer.validate();
    task.validate();
    const bool classification = task.kind == TaskKind::classification;
    const bool protocol_classification =
        evaluation.kind == ProtocolKind::base_to_new || evaluation.kind == ProtocolKind::transfer;
    if (classification != protocol_classification ||
        (task.kind == TaskKind::retrieval && evaluation.kind != ProtocolKind::retrieval) ||
        (task.kind == TaskKind::vqa && evaluation.kind != ProtocolKind::vqa))
        throw ConfigError("protocol " + evaluation.name() + " does not fit a " + task_kind_name(task.kind) +
                          " task");
}

std::uint64_t ExperimentConfig::hash() const {
    Json j = to_json(*this);
    j.erase("output");
    ContentHash h;
    h.str(j.dump());
    return h.value();
}

Json to_json(const EncoderSpec& spec) {
    return Json{{"seed", spec.seed},
                {"token_dim", spec.dims.token_dim},
                {"feature_dim", spec.dims.feature_dim},
                {"joint_dim", spec.dims.joint_dim}};
}

Json to_json(const ModelConfig& c) {
    return Json{{"chain_length", c.chain_length},
                {"prompt_length", c.prompt_length},
                {"temperature", c.temperature},
                {"lambda_mode", c.lambda.name()},
                {"fixed_lambda", c.lambda.value},
                {"meta_chained", c.meta_chained},
                {"prediction", c.prediction.name()},
                {"concat_k", c.prediction.concat_k}};
}

Json to_json(const VocabularySpec& s) {
    return Json{{"kind", vocabulary_kind_name(s.kind)},
                {"classes", s.classes},
                {"tokens_per_class", s.tokens_per_class},
                {"questions", s.questions},
                {"answers_per_question", s.answers_per_question},
                {"question_tokens", s.question_tokens},
                {"answer_tokens", s.answer_tokens},
                {"seed", s.seed}};
}

Json to_json(const SgdConfig& c) {
    return Json{{"learning_rate", c.learning_rate},
                {"epochs", c.epochs},
                {"batch_size", c.batch_size},
                {"momentum", c.momentum}};
}

Json to_json(const TaskSpec& s) {
    return Json{{"kind", task_kind_name(s.kind)},
                {"num_classes", s.num_classes},
                {"class_tokens", s.class_tokens},
                {"questions", s.questions},
                {"answers_per_question", s.answers_per_question},
                {"question_tokens", s.question_tokens},
                {"answer_tokens", s.answer_tokens},
                {"spread", s.spread},
                {"alignment", s.alignment},
                {"train_per_class", s.train_per_class},
                {"test_per_class", s.test_per_class},
                {"seed", s.seed}};
}

Json to_json(const ShiftSpec& s) {
    return Json{{"angle", s.angle}, {"noise", s.noise}, {"seed", s.seed}};
}

Json to_json(const Protocol& p) { return Json{{"protocol", p.name()}, {"shift", to_json(p.shift)}}; }

Json to_json(const ExperimentConfig& c) {
    return Json{{"seed", c.seed},
                {"encoders", to_json(c.encoders)},
                {"model", to_json(c.model)},
                {"optimizer", to_json(c.optimizer)},
                {"task", to_json(c.task)},
                {"evaluation", to_json(c.evaluation)},
                {"output", Json{{"directory", c.output_directory}}}};
}

EncoderSpec encoder_spec_from_json(const Json& j) {
    EncoderSpec s;
    Fields f(j, "encoders");
    f.read("seed", s.seed);
    f.read("token_dim", s.dims.token_dim);
    f.read("feature_dim", s.dims.feature_dim);
    f.read("joint_dim", s.dims.joint_dim);
    f.finish();
    return s;
}

ModelConfig model_config_from_json(const Json& j) {
    ModelConfig c;
    Fields f(j, "model");
    std::string lambda_mode = c.lambda.name(), prediction = c.prediction.name();
    double fixed = c.lambda.value;
    std::size_t concat_k = c.prediction.concat_k;
    f.read("chain_length", c.chain_length);
    f.read("prompt_length", c.prompt_length);
    f.read("temperature", c.temperature);
    f.read("lambda_mode", lambda_mode);
    f.read("fixed_lambda", fixed);
    f.read("meta_chained", c.meta_chained);
    f.read("prediction", prediction);
    f.read("concat_k", concat_k);
    f.finish();
    if (lambda_mode == "dynamic") {
        c.lambda = LambdaSchedule::dynamic();
        c.lambda.value = fixed;
    } else if (lambda_mode == "fixed") {
        c.lambda = LambdaSchedule::fixed(fixed);
    } else {
        throw ConfigError("model.lambda_mode: unknown mode '" + lambda_mode + "' (expected dynamic or fixed)");
    }
    c.prediction = PredictionMode::parse(prediction);
    c.prediction.concat_k = concat_k;
    return c;
}

VocabularySpec vocabulary_spec_from_json(const Json& j) {
    VocabularySpec s;
    Fields f(j, "vocabulary");
    std::string kind = vocabulary_kind_name(s.kind);
    f.read("kind", kind);
    f.read("classes", s.classes);
    f.read("tokens_per_class", s.tokens_per_class);
    f.read("questions", s.questions);
    f.read("answers_per_question", s.answers_per_question);
    f.read("question_tokens", s.question_tokens);
    f.read("answer_tokens", s.answer_tokens);
    f.read("seed", s.seed);
    f.finish();
    s.kind = parse_vocabulary_kind(kind);
    return s;
}

SgdConfig sgd_config_from_json(const Json& j) {
    SgdConfig c;
    Fields f(j, "optimizer");
    f.read("learning_rate", c.learning_rate);
    f.read("epochs", c.epochs);
    f.read("batch_size", c.batch_size);
    f.read("momentum", c.momentum);
    f.finish();
    return c;
}

TaskSpec task_spec_from_json(const Json& j) {
    TaskSpec s;
    Fields f(j, "task");
    std::string kind = task_kind_name(s.kind);
    f.read("kind", kind);
    f.read("num_classes", s.num_classes);
    f.read("class_tokens", s.class_tokens);
    f.read("questions", s.questions);
    f.read("answers_per_question", s.answers_per_question);
    f.read("question_tokens", s.question_tokens);
    f.read("answer_tokens", s.answer_tokens);
    f.read("spread", s.spread);
    f.read("alignment", s.alignment);
    f.read("train_per_class", s.train_per_class);
    f.read("test_per_class", s.test_per_class);
    f.read("seed", s.seed);
    f.finish();
    s.kind = parse_task_kind(kind);
    return s;
}

ShiftSpec shift_spec_from_json(const Json& j) {
    ShiftSpec s;
    Fields f(j, "evaluation.shift");
    f.read("angle", s.angle);
    f.read("noise", s.noise);
    f.read("seed", s.seed);
    f.finish();
    return s;
}

Protocol protocol_from_json(const Json& j) {
    Protocol p;
    Fields f(j, "evaluation");
    std::string name = p.name();
    f.read("protocol", name);
    if (const Json* s = f.object("shift")) p.shift = shift_spec_from_json(*s);
    f.finish();
    p.kind = parse_protocol(name);
    return p;
}

ExperimentConfig experiment_config_from_json(const Json& j) {
    ExperimentConfig c;
    Fields f(j, "config");
    f.read("seed", c.seed);
    if (const Json* s = f.object("encoders")) c.encoders = encoder_spec_from_json(*s);
    if (const Json* s = f.object("model")) c.model = model_config_from_json(*s);
    if (const Json* s = f.object("optimizer")) c.optimizer = sgd_config_from_json(*s);
    if (const Json* s = f.object("task")) c.task = task_spec_from_json(*s);
    if (const Json* s = f.object("evaluation")) c.evaluation = protocol_from_json(*s);
    if (const Json* s = f.object("output")) {
        Fields out(*s, "output");
        out.read("directory", c.output_directory);
        out.finish();
    }
    f.finish();
    c.validate();
    return c;
}

ExperimentConfig parse_config(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return experiment_config_from_json(j);
}

ExperimentConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace cotprompt
