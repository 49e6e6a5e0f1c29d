#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cotprompt/graph.hpp"
#include "cotprompt/tensor.hpp"

namespace cotprompt {

// Builds the loss on a fresh graph and returns the scalar loss node.
using LossBuilder = std::function<Var(Graph&)>;

// Per-tensor comparison. Two measures are kept:
//  - coordinate-wise |a - n| / max(|a|, |n|, 1e-12), with every coordinate
//    above tolerance flagged;
//  - norm-wise ||a - n|| / max(||a||, ||n||, 1e-12), which decides pass/fail.
// The coordinate ratio blows up on components near zero, where the central
// difference is pure round-off (~1e-9 absolute at temperature 0.01), so it is
// reported but not used as the verdict.
struct ParameterCheck {
    std::string name;
    std::size_t coordinates = 0;
    double relative_error = 0.0;  // norm-wise
    double max_coordinate_error = 0.0;
    std::size_t worst_coordinate = 0;
    double max_abs_error = 0.0;
    double gradient_norm = 0.0;
    std::vector<std::size_t> flagged;  // coordinate-wise error above tolerance
    bool passed(double tolerance) const { return relative_error < tolerance; }
};

struct GradCheckReport {
    double step = 0.0;
    double tolerance = 0.0;
    std::vector<ParameterCheck> parameters;

    double max_relative_error() const;    // norm-wise, over tensors
    double max_coordinate_error() const;  // coordinate-wise, over everything
    double max_abs_error() const;
    bool passed() const;
    std::size_t failed_tensors() const;
    std::size_t flagged_coordinates() const;
};

// |a - n| / max(|a|, |n|, 1e-12), elementwise or over the 2-norms of vectors.
double relative_error(double analytic, double numeric);
double relative_error(std::span<const double> analytic, std::span<const double> numeric);

// Reverse-mode gradients of the loss for each parameter (zeros for parameters
// the loss does not touch).
std::vector<std::vector<double>> analytic_gradients(const LossBuilder& build,
                                                    std::span<const NamedParameter> params);

// Central differences (f(x+h) - f(x-h)) / 2h, one coordinate at a time. The
// parameter values are restored exactly afterwards.
std::vector<double> numeric_gradient(const LossBuilder& build, Tensor& param, double step);

GradCheckReport compare_gradients(std::span<const NamedParameter> params,
                                  std::span<const std::vector<double>> analytic,
                                  std::span<const std::vector<double>> numeric, double step, double tolerance);

// Full check: analytic vs numeric, every coordinate of every parameter.
// ContractError if step is outside [1e-6, 1e-4].
GradCheckReport grad_check(const LossBuilder& build, std::span<const NamedParameter> params, double step,
                           double tolerance);

}  // namespace cotprompt
