#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cotprompt/encoders.hpp"
#include "cotprompt/graph.hpp"
#include "cotprompt/tensor.hpp"

namespace cotprompt {

// N learnable prompts, each L context-token vectors of width d_e. Steps are
// zero-based in code: step 0 is the first prompt of the chain.
class PromptChain {
public:
    // Every prompt starts from the same N(0, 0.02^2) draw.
    static PromptChain init(std::size_t chain_length, std::size_t prompt_length, std::size_t token_dim,
                            std::uint64_t seed);

    std::size_t chain_length() const noexcept { return prompts_.size(); }
    std::size_t prompt_length() const noexcept { return prompt_length_; }
    std::size_t token_dim() const noexcept { return token_dim_; }

    const Tensor& prompt(std::size_t step) const;
    Tensor& prompt(std::size_t step);

    // Context tokens of `step` with `bias` added to every token.
    Var biased_context(Graph& g, std::size_t step, Var bias) const;

    std::vector<NamedParameter> parameters();
    std::vector<ConstNamedParameter> parameters() const;

private:
    std::vector<Tensor> prompts_;
    std::size_t prompt_length_ = 0;
    std::size_t token_dim_ = 0;
};

// Token sequence (p_j + v_j, h_i): biased context rows followed by the
// unbiased class-description rows.
Var assemble_step_tokens(Graph& g, Var biased_context, const Tensor& class_tokens);
Var assemble_step_tokens(Graph& g, const PromptChain& chain, std::size_t step, std::size_t cls,
                         const ClassVocabulary& vocab, Var bias);

struct ChainState {
    // [step][class] embeddings
    std::vector<std::vector<Var>> raw;
    std::vector<std::vector<Var>> chained;
    Var lambdas;
};

// chained[0] = raw[0]; chained[j] = (1 - lambda_j) chained[j-1] + lambda_j raw[j].
// lambdas has one entry per step; the first is accepted and ignored.
ChainState chain_embeddings(Graph& g, std::vector<std::vector<Var>> raw, Var lambdas);

struct PredictionMode {
    enum class Kind { final, average, concat };
    Kind kind = Kind::final;
    std::size_t concat_k = 2;  // number of trailing steps for Kind::concat

    static PredictionMode final_step() { return {Kind::final, 2}; }
    static PredictionMode average() { return {Kind::average, 2}; }
    static PredictionMode concat(std::size_t k) { return {Kind::concat, k}; }

    std::string name() const;
    static PredictionMode parse(const std::string& text);  // "final" | "average" | "concat"
    void validate(std::size_t chain_length) const;
    bool operator==(const PredictionMode&) const = default;
};

// Per-class embedding read off a chain state (final / average modes).
std::vector<Var> prediction_embedding(Graph& g, const ChainState& state, const PredictionMode& mode);

// concat mode: the biased context blocks of the last k steps, in chain
// order, followed by one copy of the class tokens, encoded as one sequence.
Var concat_prediction_embedding(Graph& g, const FrozenEncoders& encoders, std::span<const Var> biased_contexts,
                                const Tensor& class_tokens, std::size_t k);

}  // namespace cotprompt
