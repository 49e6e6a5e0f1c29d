// Command line front end: train, eval, ablate, gradcheck.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "cotprompt/config.hpp"
#include "cotprompt/errors.hpp"
#include "cotprompt/experiment.hpp"
#include "cotprompt/random.hpp"

namespace fs = std::filesystem;
using namespace cotprompt;

namespace {

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
};

ExperimentConfig resolve(const Common& c) {
    ExperimentConfig config = c.config_path.empty() ? ExperimentConfig{} : load_config(c.config_path);
    if (c.seed) config.seed = *c.seed;
    if (!c.out.empty()) config.output_directory = c.out;
    config.validate();
    return config;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
}

// Wall time lives outside the report so reports stay byte-identical.
void write_timing(const std::string& dir, const std::string& name, double seconds) {
    Json j{{"run", name}, {"wall_seconds", seconds}};
    write_file((fs::path(dir) / (name + "_timing.json")).string(), j.dump(1) + "\n");
}

double since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        if (ch == '"' || ch == '\\') out += '\\';
        out += ch == '\n' ? ' ' : ch;
    }
    return out;
}

int fail(const std::string& code, const std::string& message) {
    std::cerr << "error code=" << code << " message=\"" << escape(message) << "\"\n";
    return code == "usage" ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Chain-of-thought prompt tuning on synthetic vision-language tasks"};
    app.require_subcommand(1);

    auto add_common = [](CLI::App* sub, Common& c) {
        sub->add_option("-c,--config", c.config_path, "Config file (JSON)");
        sub->add_option("-s,--seed", c.seed, "Override the run seed");
        sub->add_option("-o,--out", c.out, "Output directory");
    };

    Common train_opts;
    auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint plus run report");
    add_common(train_cmd, train_opts);

    Common eval_opts;
    std::string checkpoint, protocol;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint (or train one first) under a protocol");
    add_common(eval_cmd, eval_opts);
    eval_cmd->add_option("--checkpoint", checkpoint, "Checkpoint to evaluate; trains from the config when absent");
    eval_cmd->add_option("-p,--protocol", protocol, "base_to_new, transfer, retrieval or vqa");

    Common ablate_opts;
    std::string variant;
    std::vector<double> values;
    auto* ablate_cmd = app.add_subcommand("ablate", "Run an ablation family against the reference wiring");
    add_common(ablate_cmd, ablate_opts);
    ablate_cmd
        ->add_option("-v,--variant", variant,
                     "chain_length, average_baseline, fixed_chain, unchained_metanets, concat_k or prompt_length")
        ->required();
    ablate_cmd->add_option("--values", values, "Variant values (defaults per family)");

    Common grad_opts;
    std::size_t seeds = 20;
    double step = 1e-5, tolerance = 1e-4;
    auto* grad_cmd = app.add_subcommand("gradcheck", "Compare analytic gradients with central differences");
    add_common(grad_cmd, grad_opts);
    grad_cmd->add_option("--seeds", seeds, "Number of seeds")->check(CLI::PositiveNumber);
    grad_cmd->add_option("--step", step, "Finite-difference step");
    grad_cmd->add_option("--tolerance", tolerance, "Max relative error");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what());
    }

    try {
        const auto t0 = std::chrono::steady_clock::now();
        if (*train_cmd) {
            const ExperimentConfig config = resolve(train_opts);
            ensure_dir(config.output_directory);
            std::optional<CotModel> model;
            const RunOutcome outcome = run_experiment(config, &model);
            save_checkpoint(*model, (fs::path(config.output_directory) / "checkpoint.json").string());
            write_run(outcome, config.output_directory, "train");
            write_timing(config.output_directory, "train", since(t0));
            std::cout << metrics_csv_header() << metrics_csv_row("train", outcome.metrics);
        } else if (*eval_cmd) {
            ExperimentConfig config = resolve(eval_opts);
            if (!protocol.empty()) {
                config.evaluation.kind = parse_protocol(protocol);
                config.validate();
            }
            ensure_dir(config.output_directory);
            RunOutcome outcome;
            if (checkpoint.empty()) {
                outcome = run_experiment(config);
            } else {
                const CotModel model = load_checkpoint(checkpoint);
                if (model.frozen_hash() != prepare_experiment(config).first.frozen_hash())
                    throw ConfigError("checkpoint encoders/vocabulary do not match the config");
                outcome = evaluate_experiment(config, model);
            }
            write_run(outcome, config.output_directory, "eval");
            write_timing(config.output_directory, "eval", since(t0));
            std::cout << metrics_csv_header() << metrics_csv_row("eval", outcome.metrics);
        } else if (*ablate_cmd) {
            const ExperimentConfig config = resolve(ablate_opts);
            ensure_dir(config.output_directory);
            const AblationResult result = run_ablation(parse_ablation(variant), config, values);
            write_ablation(result, config.output_directory);
            write_timing(config.output_directory, "ablation_" + ablation_name(result.kind), since(t0));
            std::cout << ablation_delta_csv(result);
            for (const auto& audit : result.audits)
                if (!audit.matches())
                    throw ContractError("parameter audit mismatch for n=" + std::to_string(audit.n));
        } else if (*grad_cmd) {
            const ExperimentConfig config = resolve(grad_opts);
            double worst = 0.0;
            bool ok = true;
            for (std::size_t i = 0; i < seeds; ++i) {
                const std::uint64_t seed = config.seed + i;
                const GradCheckReport report = check_model_gradients(config, seed, step, tolerance);
                worst = std::max(worst, report.max_relative_error());
                ok = ok && report.passed();
                std::printf("seed=%llu rel_error=%.3e coordinate_max=%.3e abs_max=%.3e flagged_coordinates=%zu\n",
                            static_cast<unsigned long long>(seed), report.max_relative_error(),
                            report.max_coordinate_error(), report.max_abs_error(), report.flagged_coordinates());
            }
            std::printf("worst=%.3e tolerance=%.1e seconds=%.2f\n", worst, tolerance, since(t0));
            if (!ok) return fail("gradcheck", "max relative error above tolerance");
        }
    } catch (const Error& e) {
        return fail(e.code(), e.what());
    } catch (const std::exception& e) {
        return fail("internal", e.what());
    }
    return 0;
}
