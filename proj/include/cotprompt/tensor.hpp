#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace cotprompt {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major tensor of doubles. Value semantic: copying a Tensor copies
// its data and gradient buffer.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor vector(std::initializer_list<double> values);
    static Tensor vector(std::vector<double> values);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
    static Tensor scalar(double value);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return data_.size(); }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t rows() const;  // first axis of a matrix
    std::size_t cols() const;  // second axis of a matrix

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }
    std::span<const double> row(std::size_t r) const;

    bool requires_grad() const noexcept { return requires_grad_; }
    Tensor& set_requires_grad(bool on);

    bool has_grad() const noexcept { return grad_present_; }
    std::span<const double> grad() const noexcept { return grad_; }
    std::span<double> grad() noexcept { return grad_; }
    // Adds `g` into the gradient buffer, allocating it on first use.
    void accumulate_grad(std::span<const double> g);
    void zero_grad();   // keeps the buffer, sets it to zero
    void clear_grad();  // drops the buffer: gradient becomes "not populated"

    bool all_finite() const noexcept;
    bool same_values(const Tensor& other) const noexcept;  // shape and bitwise data

private:
    Shape shape_;
    std::vector<double> data_;
    bool requires_grad_ = false;
    bool grad_present_ = false;
    std::vector<double> grad_;
};

// A trainable tensor together with a human-readable name (used in gradient
// check reports and checkpoints).
struct NamedParameter {
    std::string name;
    Tensor* tensor;
};

struct ConstNamedParameter {
    std::string name;
    const Tensor* tensor;
};

std::size_t count_values(std::span<const ConstNamedParameter> params);

}  // namespace cotprompt
