#include "cotprompt/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "cotprompt/errors.hpp"

namespace cotprompt {

double GradCheckReport::max_relative_error() const {
    double m = 0.0;
    for (const auto& p : parameters) m = std::max(m, p.relative_error);
    return m;
}

double GradCheckReport::max_coordinate_error() const {
    double m = 0.0;
    for (const auto& p : parameters) m = std::max(m, p.max_coordinate_error);
    return m;
}

double GradCheckReport::max_abs_error() const {
    double m = 0.0;
    for (const auto& p : parameters) m = std::max(m, p.max_abs_error);
    return m;
}

bool GradCheckReport::passed() const { return failed_tensors() == 0; }

std::size_t GradCheckReport::failed_tensors() const {
    std::size_t n = 0;
    for (const auto& p : parameters) n += !p.passed(tolerance);
    return n;
}

std::size_t GradCheckReport::flagged_coordinates() const {
    std::size_t n = 0;
    for (const auto& p : parameters) n += p.flagged.size();
    return n;
}

double relative_error(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
    return std::abs(analytic - numeric) / denom;
}

double relative_error(std::span<const double> analytic, std::span<const double> numeric) {
    if (analytic.size() != numeric.size()) throw DimensionError("relative_error: length mismatch");
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
        na += analytic[i] * analytic[i];
        nn += numeric[i] * numeric[i];
    }
    return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), 1e-12});
}

std::vector<std::vector<double>> analytic_gradients(const LossBuilder& build,
                                                    std::span<const NamedParameter> params) {
    Graph g;
    Var loss = build(g);
    g.backward(loss);
    std::vector<std::vector<double>> out;
    out.reserve(params.size());
    for (const auto& p : params) {
        auto grad = g.leaf_gradient(*p.tensor);
        if (grad.empty()) grad.assign(p.tensor->size(), 0.0);
        out.push_back(std::move(grad));
    }
    return out;
}

std::vector<double> numeric_gradient(const LossBuilder& build, Tensor& param, double step) {
    auto eval = [&] {
        Graph g;
        return g.value(build(g))[0];
    };
    std::vector<double> out(param.size());
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double saved = param[i];
        param[i] = saved + step;
        const double up = eval();
        param[i] = saved - step;
        const double down = eval();
        param[i] = saved;
        out[i] = (up - down) / (2.0 * step);
    }
    return out;
}

GradCheckReport compare_gradients(std::span<const NamedParameter> params,
                                  std::span<const std::vector<double>> analytic,
                                  std::span<const std::vector<double>> numeric, double step, double tolerance) {
    if (analytic.size() != params.size() || numeric.size() != params.size())
        throw DimensionError("compare_gradients: gradient lists do not match the parameter list");
    GradCheckReport report{step, tolerance, {}};
    for (std::size_t p = 0; p < params.size(); ++p) {
        ParameterCheck pc;
        pc.name = params[p].name;
        pc.coordinates = analytic[p].size();
        if (numeric[p].size() != pc.coordinates)
            throw DimensionError("compare_gradients: size mismatch for " + pc.name);
        pc.relative_error = relative_error(analytic[p], numeric[p]);
        double sq = 0.0;
        for (std::size_t i = 0; i < pc.coordinates; ++i) {
            const double err = relative_error(analytic[p][i], numeric[p][i]);
            if (err > pc.max_coordinate_error) {
                pc.max_coordinate_error = err;
                pc.worst_coordinate = i;
            }
            if (err > tolerance) pc.flagged.push_back(i);
            pc.max_abs_error = std::max(pc.max_abs_error, std::abs(analytic[p][i] - numeric[p][i]));
            sq += analytic[p][i] * analytic[p][i];
        }
        pc.gradient_norm = std::sqrt(sq);
        report.parameters.push_back(std::move(pc));
    }
    return report;
}

GradCheckReport grad_check(const LossBuilder& build, std::span<const NamedParameter> params, double step,
                           double tolerance) {
    if (!(step >= 1e-6 && step <= 1e-4))
        throw ContractError("grad_check: step " + std::to_string(step) + " outside [1e-6, 1e-4]");
    const auto analytic = analytic_gradients(build, params);
    std::vector<std::vector<double>> numeric;
    numeric.reserve(params.size());
    for (const auto& p : params) numeric.push_back(numeric_gradient(build, *p.tensor, step));
    return compare_gradients(params, analytic, numeric, step, tolerance);
}

}  // namespace cotprompt
