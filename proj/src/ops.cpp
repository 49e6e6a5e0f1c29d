#include "cotprompt/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cotprompt/errors.hpp"

namespace cotprompt {
namespace {

void require_vector(const Graph& g, Var v, const char* op, const char* what) {
    if (g.value(v).rank() != 1)
        throw DimensionError(std::string(op) + ": " + what + " must be a vector, got " +
                             shape_string(g.shape(v)));
}

void require_same_shape(const Graph& g, Var a, Var b, const char* op) {
    if (g.shape(a) != g.shape(b))
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(g.shape(a)) + " vs " +
                             shape_string(g.shape(b)));
}

// Adds `scale * src` into the gradient of node `id` if it needs one.
void push_grad(Graph& g, std::size_t id, std::span<const double> src, double factor = 1.0) {
    if (!g.needs_grad(Var{id})) return;
    auto dst = g.grad_buffer(id);
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += factor * src[i];
}

constexpr double kSigmoidUpper = 1.0 - std::numeric_limits<double>::epsilon() / 2;

}  // namespace

double sigmoid(double x) {
    double s;
    if (x >= 0) {
        s = 1.0 / (1.0 + std::exp(-x));
    } else {
        const double e = std::exp(x);
        s = e / (1.0 + e);
    }
    // strictly inside (0, 1)
    return std::clamp(s, std::numeric_limits<double>::denorm_min(), kSigmoidUpper);
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw DimensionError("dot: length " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw DimensionError("cosine_similarity: length " + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()));
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (!(na > 0.0) || !(nb > 0.0)) throw DegenerateInputError("cosine_similarity: zero-norm argument");
    return dot(a, b) / (na * nb);
}

std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) throw DimensionError("softmax: empty logits");
    const double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = std::exp(logits[i] - m);
        z += p[i];
    }
    for (auto& x : p) x /= z;
    return p;
}

Var linear(Graph& g, Var input, Var weight, Var bias) {
    const Tensor& x = g.value(input);
    const Tensor& w = g.value(weight);
    const Tensor& b = g.value(bias);
    if (x.rank() != 1 || w.rank() != 2 || b.rank() != 1 || w.cols() != x.size() || w.rows() != b.size())
        throw DimensionError("linear: input " + shape_string(x.shape()) + ", weight " + shape_string(w.shape()) +
                             ", bias " + shape_string(b.shape()) + " do not conform");
    const std::size_t out = w.rows(), in = w.cols();
    Tensor y({out});
    for (std::size_t k = 0; k < out; ++k) {
        double s = 0.0;
        for (std::size_t m = 0; m < in; ++m) s += w.at(k, m) * x[m];
        y[k] = s + b[k];
    }
    return g.record("linear", std::move(y), {input.id, weight.id, bias.id}, [=](Graph& gr, std::size_t self) {
        const auto gy = gr.grad(Var{self});
        const Tensor& xv = gr.value(input);
        const Tensor& wv = gr.value(weight);
        if (gr.needs_grad(input)) {
            auto gx = gr.grad_buffer(input.id);
            for (std::size_t k = 0; k < out; ++k)
                for (std::size_t m = 0; m < in; ++m) gx[m] += wv.at(k, m) * gy[k];
        }
        if (gr.needs_grad(weight)) {
            auto gw = gr.grad_buffer(weight.id);
            for (std::size_t k = 0; k < out; ++k)
                for (std::size_t m = 0; m < in; ++m) gw[k * in + m] += gy[k] * xv[m];
        }
        push_grad(gr, bias.id, gy);
    });
}

Var activation(Graph& g, Var input, Activation kind) {
    const Tensor& x = g.value(input);
    Tensor y(x.shape());
    const char* name = "relu";
    for (std::size_t i = 0; i < x.size(); ++i) {
        switch (kind) {
            case Activation::relu: y[i] = x[i] > 0.0 ? x[i] : 0.0; break;
            case Activation::sigmoid: y[i] = sigmoid(x[i]); break;
            case Activation::tanh: y[i] = std::tanh(x[i]); break;
        }
    }
    if (kind == Activation::sigmoid) name = "sigmoid";
    if (kind == Activation::tanh) name = "tanh";
    return g.record(name, std::move(y), {input.id}, [=](Graph& gr, std::size_t self) {
        const auto gy = gr.grad(Var{self});
        const Tensor& xv = gr.value(input);
        const Tensor& yv = gr.value(Var{self});
        auto gx = gr.grad_buffer(input.id);
        for (std::size_t i = 0; i < gx.size(); ++i) {
            switch (kind) {
                case Activation::relu: gx[i] += xv[i] > 0.0 ? gy[i] : 0.0; break;
                case Activation::sigmoid: gx[i] += gy[i] * yv[i] * (1.0 - yv[i]); break;
                case Activation::tanh: gx[i] += gy[i] * (1.0 - yv[i] * yv[i]); break;
            }
        }
    });
}

Var add(Graph& g, Var a, Var b) {
    require_same_shape(g, a, b, "add");
    const Tensor& x = g.value(a);
    const Tensor& y = g.value(b);
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
    return g.record("add", std::move(out), {a.id, b.id}, [=](Graph& gr, std::size_t self) {
        const auto go = gr.grad(Var{self});
        push_grad(gr, a.id, go);
        push_grad(gr, b.id, go);
    });
}

Var mul(Graph& g, Var a, Var b) {
    require_same_shape(g, a, b, "mul");
    const Tensor& x = g.value(a);
    const Tensor& y = g.value(b);
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[i];
    return g.record("mul", std::move(out), {a.id, b.id}, [=](Graph& gr, std::size_t self) {
        const auto go = gr.grad(Var{self});
        const Tensor& xv = gr.value(a);
        const Tensor& yv = gr.value(b);
        if (gr.needs_grad(a)) {
            auto ga = gr.grad_buffer(a.id);
            for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += go[i] * yv[i];
        }
        if (gr.needs_grad(b)) {
            auto gb = gr.grad_buffer(b.id);
            for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += go[i] * xv[i];
        }
    });
}

Var scale(Graph& g, Var a, double factor) {
    const Tensor& x = g.value(a);
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * factor;
    return g.record("scale", std::move(out), {a.id}, [=](Graph& gr, std::size_t self) {
        push_grad(gr, a.id, gr.grad(Var{self}), factor);
    });
}

Var sum(Graph& g, Var a) {
    const Tensor& x = g.value(a);
    double s = 0.0;
    for (double v : x.data()) s += v;
    return g.record("sum", Tensor::scalar(s), {a.id}, [=](Graph& gr, std::size_t self) {
        const double go = gr.grad(Var{self})[0];
        auto ga = gr.grad_buffer(a.id);
        for (auto& v : ga) v += go;
    });
}

Var add_to_rows(Graph& g, Var matrix, Var bias) {
    const Tensor& m = g.value(matrix);
    const Tensor& b = g.value(bias);
    if (m.rank() != 2 || b.rank() != 1 || m.cols() != b.size())
        throw DimensionError("add_to_rows: matrix " + shape_string(m.shape()) + " and bias " +
                             shape_string(b.shape()) + " do not conform");
    const std::size_t rows = m.rows(), cols = m.cols();
    Tensor out(m.shape());
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) out.at(r, c) = m.at(r, c) + b[c];
    return g.record("add_to_rows", std::move(out), {matrix.id, bias.id}, [=](Graph& gr, std::size_t self) {
        const auto go = gr.grad(Var{self});
        push_grad(gr, matrix.id, go);
        if (gr.needs_grad(bias)) {
            auto gb = gr.grad_buffer(bias.id);
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cols; ++c) gb[c] += go[r * cols + c];
        }
    });
}

Var concat_rows(Graph& g, std::span<const Var> blocks) {
    if (blocks.empty()) throw ContractError("concat_rows: no blocks");
    const std::size_t cols = g.value(blocks[0]).cols();
    std::size_t rows = 0;
    for (Var b : blocks) {
        const Tensor& t = g.value(b);
        if (t.rank() != 2 || t.cols() != cols)
            throw DimensionError("concat_rows: block " + shape_string(t.shape()) + " does not have " +
                                 std::to_string(cols) + " columns");
        rows += t.rows();
    }
    std::vector<double> data;
    data.reserve(rows * cols);
    std::vector<std::size_t> ids;
    for (Var b : blocks) {
        const auto d = g.value(b).data();
        data.insert(data.end(), d.begin(), d.end());
        ids.push_back(b.id);
    }
    return g.record("concat_rows", Tensor::matrix(rows, cols, std::move(data)), ids,
                    [ids](Graph& gr, std::size_t self) {
                        const auto go = gr.grad(Var{self});
                        std::size_t offset = 0;
                        for (auto id : ids) {
                            const std::size_t n = gr.value(Var{id}).size();
                            push_grad(gr, id, go.subspan(offset, n));
                            offset += n;
                        }
                    });
}

Var mean_rows(Graph& g, Var matrix) {
    const Tensor& m = g.value(matrix);
    if (m.rank() != 2) throw DimensionError("mean_rows: expected a matrix, got " + shape_string(m.shape()));
    const std::size_t rows = m.rows(), cols = m.cols();
    // Each column is summed in ascending order so the result does not depend
    // on row order, bit for bit.
    Tensor out({cols});
    std::vector<double> column(rows);
    for (std::size_t c = 0; c < cols; ++c) {
        for (std::size_t r = 0; r < rows; ++r) column[r] = m.at(r, c);
        std::sort(column.begin(), column.end());
        double s = 0.0;
        for (double v : column) s += v;
        out[c] = s;
    }
    const double inv = 1.0 / static_cast<double>(rows);
    for (std::size_t c = 0; c < cols; ++c) out[c] *= inv;
    return g.record("mean_rows", std::move(out), {matrix.id}, [=](Graph& gr, std::size_t self) {
        const auto go = gr.grad(Var{self});
        auto gm = gr.grad_buffer(matrix.id);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) gm[r * cols + c] += go[c] * inv;
    });
}

Var mean_of(Graph& g, std::span<const Var> items) {
    if (items.empty()) throw ContractError("mean_of: no items");
    Tensor out(g.shape(items[0]));
    std::vector<std::size_t> ids;
    for (Var v : items) {
        require_same_shape(g, items[0], v, "mean_of");
        const Tensor& t = g.value(v);
        for (std::size_t i = 0; i < t.size(); ++i) out[i] += t[i];
        ids.push_back(v.id);
    }
    const double n = static_cast<double>(items.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] /= n;
    return g.record("mean_of", std::move(out), ids, [ids, n](Graph& gr, std::size_t self) {
        const auto go = gr.grad(Var{self});
        for (auto id : ids) push_grad(gr, id, go, 1.0 / n);
    });
}

Var l2_normalize(Graph& g, Var x) {
    const Tensor& t = g.value(x);
    const double n = l2_norm(t.data());
    if (!(n > 0.0)) throw DegenerateInputError("l2_normalize: zero-norm input");
    Tensor out(t.shape());
    for (std::size_t i = 0; i < t.size(); ++i) out[i] = t[i] / n;
    return g.record("l2_normalize", std::move(out), {x.id}, [=](Graph& gr, std::size_t self) {
        const auto go = gr.grad(Var{self});
        const Tensor& y = gr.value(Var{self});
        const double proj = dot(y.data(), go);
        auto gx = gr.grad_buffer(x.id);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += (go[i] - y[i] * proj) / n;
    });
}

Var cosine_similarity(Graph& g, Var a, Var b) {
    require_vector(g, a, "cosine_similarity", "a");
    require_same_shape(g, a, b, "cosine_similarity");
    const Tensor& x = g.value(a);
    const Tensor& y = g.value(b);
    const double na = l2_norm(x.data());
    const double nb = l2_norm(y.data());
    if (!(na > 0.0) || !(nb > 0.0)) throw DegenerateInputError("cosine_similarity: zero-norm argument");
    const double c = dot(x.data(), y.data()) / (na * nb);
    return g.record("cosine_similarity", Tensor::scalar(c), {a.id, b.id}, [=](Graph& gr, std::size_t self) {
        const double go = gr.grad(Var{self})[0];
        const Tensor& xv = gr.value(a);
        const Tensor& yv = gr.value(b);
        if (gr.needs_grad(a)) {
            auto ga = gr.grad_buffer(a.id);
            for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += go * (yv[i] / (na * nb) - c * xv[i] / (na * na));
        }
        if (gr.needs_grad(b)) {
            auto gb = gr.grad_buffer(b.id);
            for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += go * (xv[i] / (na * nb) - c * yv[i] / (nb * nb));
        }
    });
}

Var lerp(Graph& g, Var prev, Var cur, Var weights, std::size_t index) {
    require_same_shape(g, prev, cur, "lerp");
    const Tensor& w = g.value(weights);
    if (index >= w.size())
        throw IndexError("lerp: weight index " + std::to_string(index) + " out of range for " +
                         shape_string(w.shape()));
    const double lam = w[index];
    if (!(lam >= 0.0 && lam <= 1.0))
        throw ContractError("lerp: mixing weight " + std::to_string(lam) + " outside [0, 1]");
    const Tensor& p = g.value(prev);
    const Tensor& q = g.value(cur);
    Tensor out(p.shape());
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = (1.0 - lam) * p[i] + lam * q[i];
    return g.record("lerp", std::move(out), {prev.id, cur.id, weights.id}, [=](Graph& gr, std::size_t self) {
        const auto go = gr.grad(Var{self});
        push_grad(gr, prev.id, go, 1.0 - lam);
        push_grad(gr, cur.id, go, lam);
        if (gr.needs_grad(weights)) {
            const Tensor& pv = gr.value(prev);
            const Tensor& qv = gr.value(cur);
            double s = 0.0;
            for (std::size_t i = 0; i < go.size(); ++i) s += go[i] * (qv[i] - pv[i]);
            gr.grad_buffer(weights.id)[index] += s;
        }
    });
}

Var stack(Graph& g, std::span<const Var> scalars) {
    if (scalars.empty()) throw ContractError("stack: no items");
    std::vector<double> data;
    std::vector<std::size_t> ids;
    for (Var s : scalars) {
        if (g.value(s).size() != 1)
            throw DimensionError("stack: expected scalars, got " + shape_string(g.shape(s)));
        data.push_back(g.value(s)[0]);
        ids.push_back(s.id);
    }
    return g.record("stack", Tensor::vector(std::move(data)), ids, [ids](Graph& gr, std::size_t self) {
        const auto go = gr.grad(Var{self});
        for (std::size_t i = 0; i < ids.size(); ++i)
            if (gr.needs_grad(Var{ids[i]})) gr.grad_buffer(ids[i])[0] += go[i];
    });
}

CrossEntropy softmax_cross_entropy(Graph& g, Var logits, std::size_t label) {
    require_vector(g, logits, "softmax_cross_entropy", "logits");
    const Tensor& z = g.value(logits);
    if (label >= z.size())
        throw IndexError("softmax_cross_entropy: label " + std::to_string(label) + " out of range for " +
                         std::to_string(z.size()) + " classes");
    const double m = *std::max_element(z.data().begin(), z.data().end());
    double total = 0.0;
    for (double v : z.data()) total += std::exp(v - m);
    const double loss = std::log(total) - (z[label] - m);
    Tensor probs(z.shape());
    for (std::size_t i = 0; i < z.size(); ++i) probs[i] = std::exp(z[i] - m) / total;
    Var out = g.record("softmax_cross_entropy", Tensor::scalar(loss), {logits.id},
                       [=](Graph& gr, std::size_t self) {
                           const double go = gr.grad(Var{self})[0];
                           auto gz = gr.grad_buffer(logits.id);
                           for (std::size_t i = 0; i < gz.size(); ++i)
                               gz[i] += go * (probs[i] - (i == label ? 1.0 : 0.0));
                       });
    return {out, probs};
}

}  // namespace cotprompt
