#include "cotprompt/prompt_chain.hpp"

#include "cotprompt/errors.hpp"
#include "cotprompt/ops.hpp"
#include "cotprompt/random.hpp"

namespace cotprompt {

PromptChain PromptChain::init(std::size_t chain_length, std::size_t prompt_length, std::size_t token_dim,
                              std::uint64_t seed) {
    if (chain_length < 1 || prompt_length < 1 || token_dim < 1)
        throw ConfigError("prompt chain needs chain_length, prompt_length and token_dim >= 1");
    PromptChain chain;
    chain.prompt_length_ = prompt_length;
    chain.token_dim_ = token_dim;
    Rng rng(derive_seed(seed, "prompt"));
    const Tensor shared = rng.gaussian({prompt_length, token_dim}, 0.02);
    for (std::size_t j = 0; j < chain_length; ++j) {
        Tensor p = shared;
        p.set_requires_grad(true);
        chain.prompts_.push_back(std::move(p));
    }
    return chain;
}

const Tensor& PromptChain::prompt(std::size_t step) const {
    if (step >= prompts_.size())
        throw IndexError("prompt step " + std::to_string(step) + " out of range for chain of length " +
                         std::to_string(prompts_.size()));
    return prompts_[step];
}

Tensor& PromptChain::prompt(std::size_t step) {
    return const_cast<Tensor&>(static_cast<const PromptChain&>(*this).prompt(step));
}

Var PromptChain::biased_context(Graph& g, std::size_t step, Var bias) const {
    const Tensor& b = g.value(bias);
    if (b.rank() != 1 || b.size() != token_dim_)
        throw DimensionError("prompt bias " + shape_string(b.shape()) + " does not match token dim " +
                             std::to_string(token_dim_));
    return add_to_rows(g, g.leaf(prompt(step)), bias);
}

std::vector<NamedParameter> PromptChain::parameters() {
    std::vector<NamedParameter> out;
    for (std::size_t j = 0; j < prompts_.size(); ++j) out.push_back({"prompt." + std::to_string(j), &prompts_[j]});
    return out;
}

std::vector<ConstNamedParameter> PromptChain::parameters() const {
    std::vector<ConstNamedParameter> out;
    for (std::size_t j = 0; j < prompts_.size(); ++j) out.push_back({"prompt." + std::to_string(j), &prompts_[j]});
    return out;
}

Var assemble_step_tokens(Graph& g, Var biased_context, const Tensor& class_tokens) {
    const Var blocks[] = {biased_context, g.leaf(class_tokens)};
    return concat_rows(g, blocks);
}

Var assemble_step_tokens(Graph& g, const PromptChain& chain, std::size_t step, std::size_t cls,
                         const ClassVocabulary& vocab, Var bias) {
    const Tensor& tokens = vocab.tokens(cls);
    return assemble_step_tokens(g, chain.biased_context(g, step, bias), tokens);
}

ChainState chain_embeddings(Graph& g, std::vector<std::vector<Var>> raw, Var lambdas) {
    if (raw.empty()) throw ContractError("chain_embeddings: no steps");
    const Tensor& lam = g.value(lambdas);
    if (lam.rank() != 1 || lam.size() != raw.size())
        throw DimensionError("chain_embeddings: " + std::to_string(raw.size()) + " steps but lambdas " +
                             shape_string(lam.shape()));
    for (std::size_t j = 1; j < raw.size(); ++j) {
        if (!(lam[j] >= 0.0 && lam[j] <= 1.0))
            throw ContractError("chain_embeddings: lambda " + std::to_string(lam[j]) + " at step " +
                                std::to_string(j) + " outside [0, 1]");
        if (raw[j].size() != raw[0].size())
            throw DimensionError("chain_embeddings: steps disagree on class count");
    }
    ChainState state;
    state.lambdas = lambdas;
    state.chained.push_back(raw[0]);
    for (std::size_t j = 1; j < raw.size(); ++j) {
        std::vector<Var> step;
        step.reserve(raw[j].size());
        for (std::size_t i = 0; i < raw[j].size(); ++i)
            step.push_back(lerp(g, state.chained[j - 1][i], raw[j][i], lambdas, j));
        state.chained.push_back(std::move(step));
    }
    state.raw = std::move(raw);
    return state;
}

std::string PredictionMode::name() const {
    switch (kind) {
        case Kind::final: return "final";
        case Kind::average: return "average";
        case Kind::concat: return "concat";
    }
    return "final";
}

PredictionMode PredictionMode::parse(const std::string& text) {
    if (text == "final") return final_step();
    if (text == "average") return average();
    if (text == "concat") return concat(2);
    throw ConfigError("unknown prediction mode '" + text + "' (expected final, average or concat)");
}

void PredictionMode::validate(std::size_t chain_length) const {
    if (kind == Kind::concat && (concat_k < 1 || concat_k > chain_length))
        throw ConfigError("concat_k=" + std::to_string(concat_k) + " must lie in [1, " +
                          std::to_string(chain_length) + "]");
}

std::vector<Var> prediction_embedding(Graph& g, const ChainState& state, const PredictionMode& mode) {
    switch (mode.kind) {
        case PredictionMode::Kind::final: return state.chained.back();
        case PredictionMode::Kind::average: {
            std::vector<Var> out;
            const std::size_t classes = state.raw[0].size();
            for (std::size_t i = 0; i < classes; ++i) {
                std::vector<Var> per_step;
                for (const auto& step : state.raw) per_step.push_back(step[i]);
                out.push_back(mean_of(g, per_step));
            }
            return out;
        }
        case PredictionMode::Kind::concat:
            throw ConfigError("concat prediction needs token sequences; use concat_prediction_embedding");
    }
    return {};
}

Var concat_prediction_embedding(Graph& g, const FrozenEncoders& encoders, std::span<const Var> biased_contexts,
                                const Tensor& class_tokens, std::size_t k) {
    if (k < 1 || k > biased_contexts.size())
        throw ConfigError("concat_k=" + std::to_string(k) + " must lie in [1, " +
                          std::to_string(biased_contexts.size()) + "]");
    std::vector<Var> blocks(biased_contexts.end() - static_cast<std::ptrdiff_t>(k), biased_contexts.end());
    blocks.push_back(g.leaf(class_tokens));
    return encoders.encode_text(g, concat_rows(g, blocks));
}

}  // namespace cotprompt
