#include "cotprompt/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <future>
#include <sstream>

#include "cotprompt/errors.hpp"
#include "cotprompt/random.hpp"

namespace cotprompt {
namespace {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::string csv_number(const std::optional<double>& v) {
    if (!v) return "";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    return buf;
}

std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

Json metrics_json(const MetricsReport& m) {
    Json j;
    j["protocol"] = m.protocol;
    j["base_accuracy"] = optional_number(m.base_accuracy);
    j["new_accuracy"] = optional_number(m.new_accuracy);
    j["harmonic_mean"] = optional_number(m.harmonic);
    j["recall_at_1"] = optional_number(m.recall_at_1);
    j["accuracy"] = m.accuracy;
    j["correct"] = m.correct;
    j["total"] = m.total;
    j["confidence_correct"] = optional_number(m.confidence_correct);
    j["confidence_wrong"] = optional_number(m.confidence_wrong);
    j["similarity_trajectory"] = m.similarity_trajectory;
    j["train_instances"] = m.train_instances;
    j["new_class_train_exposure"] = m.new_class_train_exposure;
    j["confusion"] = m.confusion;
    return j;
}

}  // namespace

std::pair<CotModel, Dataset> prepare_experiment(const ExperimentConfig& config) {
    config.validate();
    CotModel model = CotModel::build(config.model_config(), config.encoders, config.task.vocabulary());
    Dataset data = generate_task(config.task, model.encoders(), model.vocabulary());
    return {std::move(model), std::move(data)};
}

RunOutcome run_experiment(const ExperimentConfig& config, std::optional<CotModel>* trained) {
    auto [model, data] = prepare_experiment(config);
    RunOutcome out;
    out.config = config;
    out.dataset_hash = data.content_hash();
    out.training = train(model, data, config.optimizer, derive_seed(config.seed, "shuffle"));
    out.metrics = evaluate(model, data, config.evaluation);
    out.parameter_count = model.parameter_count();
    if (trained) *trained = std::move(model);
    return out;
}

RunOutcome evaluate_experiment(const ExperimentConfig& config, const CotModel& model) {
    config.validate();
    if (!(model.encoder_spec() == config.encoders) || !(model.vocabulary_spec() == config.task.vocabulary()))
        throw ConfigError("checkpoint encoders/vocabulary do not match the config");
    RunOutcome out;
    out.config = config;
    Dataset data = generate_task(config.task, model.encoders(), model.vocabulary());
    out.dataset_hash = data.content_hash();
    out.training.frozen_hash_before = out.training.frozen_hash_after = model.frozen_hash();
    out.metrics = evaluate(model, data, config.evaluation);
    out.parameter_count = model.parameter_count();
    return out;
}

GradCheckReport check_model_gradients(const ExperimentConfig& config, std::uint64_t seed, double step,
                                      double tolerance) {
    ExperimentConfig c = config;
    c.seed = seed;
    c.validate();
    CotModel model = CotModel::build(c.model_config(), c.encoders, c.task.vocabulary());
    Rng rng(derive_seed(seed, "gradcheck"));
    for (std::size_t j = 0; j < model.prompts().chain_length(); ++j)
        for (auto& x : model.prompts().prompt(j).data()) x += rng.normal(0.0, 0.5);
    const Tensor feature = rng.gaussian({c.encoders.dims.feature_dim}, 1.0);
    std::vector<std::size_t> classes(model.class_count());
    for (std::size_t i = 0; i < classes.size(); ++i) classes[i] = i;
    const std::size_t label = std::uniform_int_distribution<std::size_t>(0, classes.size() - 1)(rng.engine());
    const LossBuilder build = [&](Graph& g) { return model.instance_loss(g, feature, label, classes); };
    return grad_check(build, model.parameters(), step, tolerance);
}

Json report_json(const RunOutcome& o, const std::string& variant) {
    Json config = to_json(o.config);
    config.erase("output");

    Json meta;
    meta["config_hash"] = hex64(o.config.hash());
    meta["seed"] = o.config.seed;
    meta["encoder_seed"] = o.config.encoders.seed;
    meta["task_seed"] = o.config.task.seed;
    meta["dataset_hash"] = hex64(o.dataset_hash);
    meta["lambda_mode"] = o.config.model.lambda.name();
    if (o.config.model.lambda.mode == LambdaSchedule::Mode::fixed) meta["fixed_lambda"] = o.config.model.lambda.value;
    Json notes = Json::array();
    if (o.config.model.lambda.mode == LambdaSchedule::Mode::dynamic)
        notes.push_back("lambda_1 is emitted by the controller but unused: step 1 starts the chain from its own embedding");
    meta["notes"] = notes;

    Json training;
    training["epoch_losses"] = o.training.epoch_losses;
    training["train_accuracy"] = o.training.train_accuracy;
    training["steps"] = o.training.steps;
    training["frozen_hash_before"] = hex64(o.training.frozen_hash_before);
    training["frozen_hash_after"] = hex64(o.training.frozen_hash_after);
    training["frozen_unchanged"] = o.training.frozen_hash_before == o.training.frozen_hash_after;

    Json j;
    j["variant"] = variant;
    j["metadata"] = std::move(meta);
    j["config"] = std::move(config);
    j["parameter_count"] = o.parameter_count;
    j["training"] = std::move(training);
    j["metrics"] = metrics_json(o.metrics);
    return j;
}

std::string metrics_csv_header() { return "variant,base,new,H,R@1,confidence_correct,confidence_wrong\n"; }

std::string metrics_csv_row(const std::string& variant, const MetricsReport& m) {
    return variant + "," + csv_number(m.base_accuracy) + "," + csv_number(m.new_accuracy) + "," +
           csv_number(m.harmonic) + "," + csv_number(m.recall_at_1) + "," + csv_number(m.confidence_correct) + "," +
           csv_number(m.confidence_wrong) + "\n";
}

std::string confusion_csv(const MetricsReport& m) {
    std::ostringstream out;
    out << "true\\predicted";
    for (std::size_t c = 0; c < m.confusion.size(); ++c) out << "," << c;
    out << "\n";
    for (std::size_t r = 0; r < m.confusion.size(); ++r) {
        out << r;
        for (auto v : m.confusion[r]) out << "," << v;
        out << "\n";
    }
    return out.str();
}

void write_run(const RunOutcome& outcome, const std::string& dir, const std::string& name) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path base(dir);
    write_file((base / (name + ".json")).string(), report_json(outcome, name).dump(2) + "\n");
    write_file((base / (name + "_confusion.csv")).string(), confusion_csv(outcome.metrics));
    write_file((base / (name + "_metrics.csv")).string(),
               metrics_csv_header() + metrics_csv_row(name, outcome.metrics));
}

std::string ablation_name(AblationKind kind) {
    switch (kind) {
        case AblationKind::chain_length: return "chain_length";
        case AblationKind::average_baseline: return "average_baseline";
        case AblationKind::fixed_chain: return "fixed_chain";
        case AblationKind::unchained_metanets: return "unchained_metanets";
        case AblationKind::concat_k: return "concat_k";
        case AblationKind::prompt_length: return "prompt_length";
    }
    return "chain_length";
}

AblationKind parse_ablation(const std::string& text) {
    for (auto k : {AblationKind::chain_length, AblationKind::average_baseline, AblationKind::fixed_chain,
                   AblationKind::unchained_metanets, AblationKind::concat_k, AblationKind::prompt_length})
        if (ablation_name(k) == text) return k;
    throw ConfigError("unknown ablation '" + text +
                      "' (expected chain_length, average_baseline, fixed_chain, unchained_metanets, concat_k or "
                      "prompt_length)");
}

std::vector<double> default_ablation_values(AblationKind kind) {
    switch (kind) {
        case AblationKind::chain_length: return {1, 2, 3, 4, 5};
        case AblationKind::average_baseline: return {3, 4, 5};
        case AblationKind::fixed_chain: return {0.5, 0.7};
        case AblationKind::unchained_metanets: return {};
        case AblationKind::concat_k: return {2, 3};
        case AblationKind::prompt_length: return {4, 8, 16};
    }
    return {};
}

ExperimentConfig reference_config(const ExperimentConfig& base) {
    ExperimentConfig c = base;
    c.model.chain_length = 3;
    c.model.lambda = LambdaSchedule::dynamic();
    c.model.meta_chained = true;
    c.model.prediction = PredictionMode::final_step();
    return c;
}

std::vector<AblationVariant> ablation_variants(AblationKind kind, const ExperimentConfig& base,
                                               std::vector<double> values) {
    if (values.empty()) values = default_ablation_values(kind);
    const ExperimentConfig ref = reference_config(base);
    auto count = [](double v, const char* what) {
        if (!(v >= 1.0) || v != std::floor(v))
            throw ConfigError(std::string(what) + " must be a positive integer, got " + format_value(v));
        return static_cast<std::size_t>(v);
    };
    std::vector<AblationVariant> out;
    const std::string prefix = ablation_name(kind);
    if (kind == AblationKind::unchained_metanets) {
        ExperimentConfig c = ref;
        c.model.meta_chained = false;
        out.push_back({prefix, c});
        return out;
    }
    for (double v : values) {
        ExperimentConfig c = ref;
        switch (kind) {
            case AblationKind::chain_length: c.model.chain_length = count(v, "chain length"); break;
            case AblationKind::average_baseline:
                c.model.chain_length = count(v, "prompt count");
                c.model.lambda = LambdaSchedule::fixed(0.5);  // no controller; the value is never read
                c.model.meta_chained = false;
                c.model.prediction = PredictionMode::average();
                break;
            case AblationKind::fixed_chain: c.model.lambda = LambdaSchedule::fixed(v); break;
            case AblationKind::concat_k: c.model.prediction = PredictionMode::concat(count(v, "concat k")); break;
            case AblationKind::prompt_length: c.model.prompt_length = count(v, "prompt length"); break;
            case AblationKind::unchained_metanets: break;
        }
        c.validate();
        out.push_back({prefix + "=" + format_value(v), c});
    }
    return out;
}

ParameterAudit audit_average_baseline(const ExperimentConfig& base, std::size_t n) {
    ExperimentConfig chain = reference_config(base);
    chain.model.chain_length = n;
    const auto variants = ablation_variants(AblationKind::average_baseline, base, {static_cast<double>(n)});
    const VocabularySpec vocab = base.task.vocabulary();
    const CotModel chain_model = CotModel::build(chain.model_config(), chain.encoders, vocab);
    const CotModel avg_model = CotModel::build(variants[0].config.model_config(), base.encoders, vocab);

    ParameterAudit a;
    a.n = n;
    a.chain_parameters = chain_model.parameter_count();
    a.average_parameters = avg_model.parameter_count();
    a.observed_delta = a.chain_parameters - a.average_parameters;
    const std::size_t d = base.encoders.dims.joint_dim, h = d / 16;
    a.controller_hidden = d * h + h;
    a.controller_output = h * n + n;
    a.predicted_delta = a.controller_hidden + a.controller_output;
    return a;
}

AblationResult run_ablation(AblationKind kind, const ExperimentConfig& base, std::vector<double> values) {
    const auto variants = ablation_variants(kind, base, values);
    AblationResult result;
    result.kind = kind;

    auto ref_future = std::async(std::launch::async, [cfg = reference_config(base)] { return run_experiment(cfg); });
    std::vector<std::future<RunOutcome>> futures;
    for (const auto& v : variants)
        futures.push_back(std::async(std::launch::async, [cfg = v.config] { return run_experiment(cfg); }));

    result.reference = {"reference", ref_future.get()};
    for (std::size_t i = 0; i < variants.size(); ++i) result.variants.emplace_back(variants[i].name, futures[i].get());

    if (kind == AblationKind::average_baseline)
        for (const auto& v : variants) result.audits.push_back(audit_average_baseline(base, v.config.model.chain_length));
    return result;
}

std::string ablation_csv(const AblationResult& result) {
    std::string out = metrics_csv_header();
    out += metrics_csv_row(result.reference.first, result.reference.second.metrics);
    for (const auto& [name, o] : result.variants) out += metrics_csv_row(name, o.metrics);
    return out;
}

std::string ablation_delta_csv(const AblationResult& result) {
    const auto& ref = result.reference.second.metrics;
    auto delta = [](const std::optional<double>& a, const std::optional<double>& b) -> std::optional<double> {
        if (!a || !b) return std::nullopt;
        return *a - *b;
    };
    std::string out = "variant,parameters,H,delta_H,R@1,delta_R@1\n";
    for (const auto& [name, o] : result.variants) {
        out += name + "," + std::to_string(o.parameter_count) + "," + csv_number(o.metrics.harmonic) + "," +
               csv_number(delta(o.metrics.harmonic, ref.harmonic)) + "," + csv_number(o.metrics.recall_at_1) + "," +
               csv_number(delta(o.metrics.recall_at_1, ref.recall_at_1)) + "\n";
    }
    return out;
}

void write_ablation(const AblationResult& result, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path base(dir);
    const std::string kind = ablation_name(result.kind);
    write_run(result.reference.second, dir, kind + "_reference");
    for (const auto& [name, o] : result.variants) write_run(o, dir, name);
    write_file((base / ("ablation_" + kind + ".csv")).string(), ablation_csv(result));
    write_file((base / ("ablation_" + kind + "_delta.csv")).string(), ablation_delta_csv(result));
    if (!result.audits.empty()) {
        Json audits = Json::array();
        for (const auto& a : result.audits)
            audits.push_back(Json{{"n", a.n},
                                  {"chain_parameters", a.chain_parameters},
                                  {"average_parameters", a.average_parameters},
                                  {"observed_delta", a.observed_delta},
                                  {"predicted_delta", a.predicted_delta},
                                  {"controller_hidden", a.controller_hidden},
                                  {"controller_output", a.controller_output},
                                  {"matches", a.matches()}});
        write_file((base / ("ablation_" + kind + "_audit.json")).string(), audits.dump(2) + "\n");
    }
}

}  // namespace cotprompt
