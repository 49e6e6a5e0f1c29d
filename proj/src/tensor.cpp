#include "cotprompt/tensor.hpp"

#include <cmath>
#include <cstring>
#include <numeric>

#include "cotprompt/errors.hpp"

namespace cotprompt {

std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
    for (auto s : shape_)
        if (s == 0) throw DimensionError("tensor shape " + shape_string(shape_) + " has a zero axis");
    data_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    for (auto s : shape_)
        if (s == 0) throw DimensionError("tensor shape " + shape_string(shape_) + " has a zero axis");
    if (shape_size(shape_) != data_.size())
        throw DimensionError("tensor shape " + shape_string(shape_) + " does not match " +
                             std::to_string(data_.size()) + " values");
}

Tensor Tensor::vector(std::initializer_list<double> values) {
    return vector(std::vector<double>(values));
}

Tensor Tensor::vector(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    return Tensor({rows, cols}, std::move(values));
}

Tensor Tensor::scalar(double value) { return Tensor({1}, std::vector<double>{value}); }

std::size_t Tensor::rows() const {
    if (rank() != 2) throw DimensionError("rows() on non-matrix " + shape_string(shape_));
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) throw DimensionError("cols() on non-matrix " + shape_string(shape_));
    return shape_[1];
}

std::span<const double> Tensor::row(std::size_t r) const {
    const std::size_t c = cols();
    return std::span<const double>(data_).subspan(r * c, c);
}

Tensor& Tensor::set_requires_grad(bool on) {
    requires_grad_ = on;
    if (!on) clear_grad();
    return *this;
}

void Tensor::accumulate_grad(std::span<const double> g) {
    if (g.size() != data_.size())
        throw DimensionError("gradient of size " + std::to_string(g.size()) + " for tensor " +
                             shape_string(shape_));
    if (!grad_present_) {
        grad_.assign(data_.size(), 0.0);
        grad_present_ = true;
    }
    for (std::size_t i = 0; i < g.size(); ++i) grad_[i] += g[i];
}

void Tensor::zero_grad() {
    grad_.assign(data_.size(), 0.0);
    grad_present_ = true;
}

void Tensor::clear_grad() {
    grad_.clear();
    grad_present_ = false;
}

bool Tensor::all_finite() const noexcept {
    for (double x : data_)
        if (!std::isfinite(x)) return false;
    return true;
}

bool Tensor::same_values(const Tensor& other) const noexcept {
    return shape_ == other.shape_ &&
           (data_.empty() || std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(double)) == 0);
}

std::size_t count_values(std::span<const ConstNamedParameter> params) {
    std::size_t n = 0;
    for (const auto& p : params) n += p.tensor->size();
    return n;
}

}  // namespace cotprompt
