#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cotprompt/config.hpp"
#include "cotprompt/gradcheck.hpp"
#include "cotprompt/metrics.hpp"
#include "cotprompt/training.hpp"

namespace cotprompt {

struct RunOutcome {
    ExperimentConfig config;
    TrainResult training;
    MetricsReport metrics;
    std::size_t parameter_count = 0;
    std::uint64_t dataset_hash = 0;
};

// Builds the model and synthetic dataset a config describes.
std::pair<CotModel, Dataset> prepare_experiment(const ExperimentConfig& config);

// Train on the config's task, then evaluate with its protocol. The trained
// model is moved into `trained` when given.
RunOutcome run_experiment(const ExperimentConfig& config, std::optional<CotModel>* trained = nullptr);

// Evaluation-only run of an already trained model (used by `eval`).
RunOutcome evaluate_experiment(const ExperimentConfig& config, const CotModel& model);

// Gradient check of the full model built from `config` (with `seed` as the
// run seed) on one random instance: random image feature, random label among
// all classes, prompts jittered (std 0.5) so the chain steps differ and the
// controller sees a real gradient.
GradCheckReport check_model_gradients(const ExperimentConfig& config, std::uint64_t seed, double step,
                                      double tolerance);

// Deterministic report: no wall-clock values, fixed key order.
Json report_json(const RunOutcome& outcome, const std::string& variant);
std::string metrics_csv_header();
std::string metrics_csv_row(const std::string& variant, const MetricsReport& m);
std::string confusion_csv(const MetricsReport& m);

// Writes <name>.json, <name>_confusion.csv and <name>_metrics.csv into dir.
void write_run(const RunOutcome& outcome, const std::string& dir, const std::string& name);

enum class AblationKind { chain_length, average_baseline, fixed_chain, unchained_metanets, concat_k, prompt_length };

std::string ablation_name(AblationKind kind);
AblationKind parse_ablation(const std::string& text);
std::vector<double> default_ablation_values(AblationKind kind);

struct AblationVariant {
    std::string name;
    ExperimentConfig config;
};

// The default wiring (N=3, dynamic controller, chained Meta-Nets, final
// prompt) with every other field taken from `base`.
ExperimentConfig reference_config(const ExperimentConfig& base);
std::vector<AblationVariant> ablation_variants(AblationKind kind, const ExperimentConfig& base,
                                               std::vector<double> values = {});

// Trainable-parameter comparison of an n-step chain against the n-prompt
// averaging baseline. The chain carries the controller on top:
// hidden layer d*(d/16) + d/16 and output layer (d/16)*n + n.
struct ParameterAudit {
    std::size_t n = 0;
    std::size_t chain_parameters = 0;
    std::size_t average_parameters = 0;
    std::size_t observed_delta = 0;
    std::size_t predicted_delta = 0;
    std::size_t controller_hidden = 0;
    std::size_t controller_output = 0;
    bool matches() const { return observed_delta == predicted_delta; }
};

ParameterAudit audit_average_baseline(const ExperimentConfig& base, std::size_t n);

struct AblationResult {
    AblationKind kind = AblationKind::chain_length;
    std::pair<std::string, RunOutcome> reference;
    std::vector<std::pair<std::string, RunOutcome>> variants;
    std::vector<ParameterAudit> audits;  // average_baseline only
};

// Variants run concurrently; each owns its model, dataset and report.
AblationResult run_ablation(AblationKind kind, const ExperimentConfig& base, std::vector<double> values = {});

std::string ablation_csv(const AblationResult& result);
std::string ablation_delta_csv(const AblationResult& result);
// Per-variant reports plus ablation_<kind>.csv, ablation_<kind>_delta.csv
// and (average_baseline) ablation_<kind>_audit.json.
void write_ablation(const AblationResult& result, const std::string& dir);

}  // namespace cotprompt
