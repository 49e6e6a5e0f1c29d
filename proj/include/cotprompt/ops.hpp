#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cotprompt/graph.hpp"
#include "cotprompt/tensor.hpp"

namespace cotprompt {

enum class Activation { relu, sigmoid, tanh };

// ---- differentiable ops (record onto a Graph) ------------------------------

// weight[d_out x d_in] * input[d_in] + bias[d_out]
Var linear(Graph& g, Var input, Var weight, Var bias);
Var activation(Graph& g, Var input, Activation kind);
Var add(Graph& g, Var a, Var b);
Var mul(Graph& g, Var a, Var b);  // elementwise
Var scale(Graph& g, Var a, double factor);
Var sum(Graph& g, Var a);  // -> [1]
// Adds bias[c] to every row of matrix[r x c].
Var add_to_rows(Graph& g, Var matrix, Var bias);
// Stacks matrices with equal column count on top of each other.
Var concat_rows(Graph& g, std::span<const Var> blocks);
// Mean over the rows of matrix[r x c] -> [c].
Var mean_rows(Graph& g, Var matrix);
// Elementwise mean of equally shaped tensors.
Var mean_of(Graph& g, std::span<const Var> items);
Var l2_normalize(Graph& g, Var x);
// <a,b> / (|a| |b|) -> [1]; DegenerateInputError on a zero-norm argument.
Var cosine_similarity(Graph& g, Var a, Var b);
// (1 - w) * prev + w * cur with w = weights[index].
Var lerp(Graph& g, Var prev, Var cur, Var weights, std::size_t index);
// Gathers scalar nodes into one vector.
Var stack(Graph& g, std::span<const Var> scalars);

struct CrossEntropy {
    Var loss;
    Tensor probabilities;
};

// Max-shifted log-softmax cross entropy. IndexError on a bad label.
CrossEntropy softmax_cross_entropy(Graph& g, Var logits, std::size_t label);

// ---- plain numeric helpers ----------------------------------------------

double sigmoid(double x);
double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> a);
double cosine_similarity(std::span<const double> a, std::span<const double> b);
std::vector<double> softmax(std::span<const double> logits);

}  // namespace cotprompt
