#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "infobot/numerics/params.hpp"
#include "infobot/numerics/tensor.hpp"

namespace infobot::num {

/// Handle to a node on a Tape.
struct Var {
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
    std::size_t id = npos;
    bool valid() const { return id != npos; }
};

/// Reverse-mode gradient tape. Nodes are appended by the op functions below;
/// backward() walks them in reverse and deposits gradients into the Params
/// that were bound with param().
class Tape {
public:
    using Backward = std::function<void(Tape&, std::size_t)>;

    Var constant(Tensor value) { return push(std::move(value), nullptr); }

    /// Binds a parameter. Binding the same Param twice returns the same node,
    /// so weights reused across time steps share one gradient accumulator.
    Var param(Param& p)
    {
        if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var{it->second};
        Var v = push(p.value, nullptr);
        nodes_[v.id].param = &p;
        param_nodes_.emplace(&p, v.id);
        return v;
    }

    const Tensor& value(Var v) const { return nodes_.at(v.id).value; }

    double item(Var v) const
    {
        const Tensor& t = value(v);
        if (t.size() != 1) throw shape_error("item() on non-scalar " + shape_string(t.shape));
        return t[0];
    }

    /// Gradient buffer of a node, allocated (zeroed) on first touch.
    std::vector<double>& grad(std::size_t id)
    {
        auto& n = nodes_[id];
        if (n.grad.size() != n.value.size()) n.grad.assign(n.value.size(), 0.0);
        return n.grad;
    }

    bool has_grad(std::size_t id) const { return !nodes_[id].grad.empty(); }

    Var push(Tensor value, Backward back)
    {
        Node n;
        n.value = std::move(value);
        n.back = std::move(back);
        nodes_.push_back(std::move(n));
        return Var{nodes_.size() - 1};
    }

    /// Accumulates d(loss)/d(param) into every bound Param's grad.
    void backward(Var loss)
    {
        if (!loss.valid() || loss.id >= nodes_.size())
            throw std::invalid_argument("backward: loss is not on this tape");
        if (nodes_[loss.id].value.size() != 1)
            throw shape_error("backward: loss must be scalar, got " + shape_string(nodes_[loss.id].value.shape));
        for (auto& n : nodes_) n.grad.clear();
        grad(loss.id)[0] = 1.0;
        for (std::size_t i = loss.id + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (n.grad.empty()) continue;
            if (n.back) n.back(*this, i);
            if (n.param) {
                auto& dst = n.param->grad.values;
                for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += n.grad[k];
            }
        }
    }

    std::size_t size() const { return nodes_.size(); }

    void clear()
    {
        nodes_.clear();
        param_nodes_.clear();
    }

private:
    struct Node {
        Tensor value;
        std::vector<double> grad;
        Backward back;
        Param* param = nullptr;
    };

    std::vector<Node> nodes_;
    std::unordered_map<const Param*, std::size_t> param_nodes_;
};

namespace detail {

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op)
{
    if (a.shape != b.shape)
        throw shape_error(std::string(op) + ": shape mismatch " + shape_string(a.shape) + " vs "
                          + shape_string(b.shape));
}

template <class F, class D>
Var unary(Tape& t, Var a, F f, D dfdx_from_xy)
{
    const Tensor& x = t.value(a);
    Tensor y(x.shape);
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
    return t.push(std::move(y), [a, dfdx_from_xy](Tape& tp, std::size_t self) {
        const auto& g = tp.grad(self);
        const Tensor& xv = tp.value(a);
        const Tensor& yv = tp.value(Var{self});
        auto& ga = tp.grad(a.id);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * dfdx_from_xy(xv[i], yv[i]);
    });
}

}  // namespace detail

/// out = x * W + b, x: [B, n], W: [n, m], b: [m] or [1, m].
inline Var affine(Tape& t, Var x, Var w, Var b)
{
    const Tensor& xv = t.value(x);
    const Tensor& wv = t.value(w);
    const Tensor& bv = t.value(b);
    if (wv.shape.size() != 2 || xv.cols() != wv.rows() || bv.size() != wv.cols())
        throw shape_error("affine: input " + shape_string(xv.shape) + " does not conform to weights "
                          + shape_string(wv.shape) + " and bias " + shape_string(bv.shape));
    const std::size_t rows = xv.rows(), n = wv.rows(), m = wv.cols();
    Tensor out({rows, m});
    for (std::size_t r = 0; r < rows; ++r) {
        double* o = &out.values[r * m];
        for (std::size_t j = 0; j < m; ++j) o[j] = bv[j];
        const double* xr = &xv.values[r * n];
        for (std::size_t i = 0; i < n; ++i) {
            const double xi = xr[i];
            if (xi == 0.0) continue;
            const double* wr = &wv.values[i * m];
            for (std::size_t j = 0; j < m; ++j) o[j] += xi * wr[j];
        }
    }
    return t.push(std::move(out), [x, w, b, rows, n, m](Tape& tp, std::size_t self) {
        const auto& g = tp.grad(self);
        const Tensor& xv = tp.value(x);
        const Tensor& wv = tp.value(w);
        auto& gx = tp.grad(x.id);
        auto& gw = tp.grad(w.id);
        auto& gb = tp.grad(b.id);
        for (std::size_t r = 0; r < rows; ++r) {
            const double* gr = &g[r * m];
            const double* xr = &xv.values[r * n];
            for (std::size_t j = 0; j < m; ++j) gb[j] += gr[j];
            for (std::size_t i = 0; i < n; ++i) {
                const double* wr = &wv.values[i * m];
                double* gwr = &gw[i * m];
                double acc = 0.0;
                const double xi = xr[i];
                for (std::size_t j = 0; j < m; ++j) {
                    acc += gr[j] * wr[j];
                    gwr[j] += xi * gr[j];
                }
                gx[r * n + i] += acc;
            }
        }
    });
}

/// Elementwise a + b; b may also be a single row broadcast over a's rows.
inline Var add(Tape& t, Var a, Var b)
{
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    const bool broadcast = av.shape != bv.shape;
    if (broadcast && (bv.rows() != 1 || bv.cols() != av.cols()))
        throw shape_error("add: shape mismatch " + shape_string(av.shape) + " vs " + shape_string(bv.shape));
    Tensor out = av;
    const std::size_t m = av.cols();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += broadcast ? bv[i % m] : bv[i];
    return t.push(std::move(out), [a, b, broadcast, m](Tape& tp, std::size_t self) {
        const auto& g = tp.grad(self);
        auto& ga = tp.grad(a.id);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        auto& gb = tp.grad(b.id);
        for (std::size_t i = 0; i < g.size(); ++i) gb[broadcast ? i % m : i] += g[i];
    });
}

inline Var sub(Tape& t, Var a, Var b)
{
    detail::require_same_shape(t.value(a), t.value(b), "sub");
    Tensor out = t.value(a);
    const Tensor& bv = t.value(b);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
    return t.push(std::move(out), [a, b](Tape& tp, std::size_t self) {
        const auto& g = tp.grad(self);
        auto& ga = tp.grad(a.id);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        auto& gb = tp.grad(b.id);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    });
}

inline Var mul(Tape& t, Var a, Var b)
{
    detail::require_same_shape(t.value(a), t.value(b), "mul");
    Tensor out = t.value(a);
    const Tensor& bv = t.value(b);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
    return t.push(std::move(out), [a, b](Tape& tp, std::size_t self) {
        const auto& g = tp.grad(self);
        const Tensor& av = tp.value(a);
        const Tensor& bv = tp.value(b);
        auto& ga = tp.grad(a.id);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
        auto& gb = tp.grad(b.id);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    });
}

/// scale * a + shift, elementwise.
inline Var scale_shift(Tape& t, Var a, double scale, double shift = 0.0)
{
    Tensor out = t.value(a);
    for (double& v : out.values) v = scale * v + shift;
    return t.push(std::move(out), [a, scale](Tape& tp, std::size_t self) {
        const auto& g = tp.grad(self);
        auto& ga = tp.grad(a.id);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += scale * g[i];
    });
}

inline Var tanh(Tape& t, Var a)
{
    return detail::unary(
        t, a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

inline Var sigmoid(Tape& t, Var a)
{
    return detail::unary(
        t, a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); }, [](double, double y) { return y * (1.0 - y); });
}

inline Var relu(Tape& t, Var a)
{
    return detail::unary(
        t, a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

inline Var exp(Tape& t, Var a)
{
    return detail::unary(
        t, a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

inline Var square(Tape& t, Var a)
{
    return detail::unary(
        t, a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

/// Clamp to [lo, hi]; the gradient is zero wherever the clamp is active.
inline Var clamp(Tape& t, Var a, double lo, double hi)
{
    return detail::unary(
        t, a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
        [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

/// Column-wise concatenation of tensors with equal row counts.
inline Var concat(Tape& t, std::initializer_list<Var> parts)
{
    std::vector<Var> ps(parts);
    const std::size_t rows = t.value(ps.front()).rows();
    std::vector<std::size_t> widths;
    std::size_t total = 0;
    for (Var p : ps) {
        const Tensor& v = t.value(p);
        if (v.rows() != rows)
            throw shape_error("concat: row mismatch " + shape_string(t.value(ps.front()).shape) + " vs "
                              + shape_string(v.shape));
        widths.push_back(v.cols());
        total += v.cols();
    }
    Tensor out({rows, total});
    for (std::size_t r = 0; r < rows; ++r) {
        std::size_t off = 0;
        for (std::size_t k = 0; k < ps.size(); ++k) {
            const Tensor& v = t.value(ps[k]);
            std::copy_n(&v.values[r * widths[k]], widths[k], &out.values[r * total + off]);
            off += widths[k];
        }
    }
    return t.push(std::move(out), [ps, widths, rows, total](Tape& tp, std::size_t self) {
        const auto& g = tp.grad(self);
        std::size_t off = 0;
        for (std::size_t k = 0; k < ps.size(); ++k) {
            auto& gk = tp.grad(ps[k].id);
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < widths[k]; ++c) gk[r * widths[k] + c] += g[r * total + off + c];
            off += widths[k];
        }
    });
}

/// Columns [begin, begin + count) of every row.
inline Var slice(Tape& t, Var a, std::size_t begin, std::size_t count)
{
    const Tensor& av = t.value(a);
    const std::size_t rows = av.rows(), cols = av.cols();
    if (begin + count > cols)
        throw shape_error("slice: columns [" + std::to_string(begin) + "," + std::to_string(begin + count)
                          + ") out of range for " + shape_string(av.shape));
    Tensor out({rows, count});
    for (std::size_t r = 0; r < rows; ++r)
        std::copy_n(&av.values[r * cols + begin], count, &out.values[r * count]);
    return t.push(std::move(out), [a, begin, count, rows, cols](Tape& tp, std::size_t self) {
        const auto& g = tp.grad(self);
        auto& ga = tp.grad(a.id);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < count; ++c) ga[r * cols + begin + c] += g[r * count + c];
    });
}

inline Var sum(Tape& t, Var a)
{
    const Tensor& av = t.value(a);
    double s = 0.0;
    for (double v : av.values) s += v;
    return t.push(Tensor::scalar(s), [a](Tape& tp, std::size_t self) {
        const double g = tp.grad(self)[0];
        for (double& ga : tp.grad(a.id)) ga += g;
    });
}

/// Scalar sum_k coeff_k * sum(var_k).
inline Var linear_combination(Tape& t, std::vector<std::pair<Var, double>> terms)
{
    double s = 0.0;
    for (const auto& [v, c] : terms)
        for (double x : t.value(v).values) s += c * x;
    return t.push(Tensor::scalar(s), [terms = std::move(terms)](Tape& tp, std::size_t self) {
        const double g = tp.grad(self)[0];
        for (const auto& [v, c] : terms)
            for (double& gv : tp.grad(v.id)) gv += c * g;
    });
}

/// Row-wise log-softmax.
inline Var log_softmax(Tape& t, Var a)
{
    const Tensor& av = t.value(a);
    const std::size_t rows = av.rows(), cols = av.cols();
    Tensor out(av.shape);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* x = &av.values[r * cols];
        const double mx = *std::max_element(x, x + cols);
        double z = 0.0;
        for (std::size_t c = 0; c < cols; ++c) z += std::exp(x[c] - mx);
        const double lse = mx + std::log(z);
        for (std::size_t c = 0; c < cols; ++c) out.values[r * cols + c] = x[c] - lse;
    }
    return t.push(std::move(out), [a, rows, cols](Tape& tp, std::size_t self) {
        const auto& g = tp.grad(self);
        const Tensor& y = tp.value(Var{self});
        auto& ga = tp.grad(a.id);
        for (std::size_t r = 0; r < rows; ++r) {
            double gs = 0.0;
            for (std::size_t c = 0; c < cols; ++c) gs += g[r * cols + c];
            for (std::size_t c = 0; c < cols; ++c)
                ga[r * cols + c] += g[r * cols + c] - std::exp(y.values[r * cols + c]) * gs;
        }
    });
}

/// Scalar element (row, col) of a.
inline Var pick(Tape& t, Var a, std::size_t row, std::size_t col)
{
    const Tensor& av = t.value(a);
    if (row >= av.rows() || col >= av.cols())
        throw shape_error("pick: index (" + std::to_string(row) + "," + std::to_string(col) + ") out of range for "
                          + shape_string(av.shape));
    const std::size_t idx = row * av.cols() + col;
    return t.push(Tensor::scalar(av.values[idx]), [a, idx](Tape& tp, std::size_t self) {
        tp.grad(a.id)[idx] += tp.grad(self)[0];
    });
}

/// Row-wise entropy of softmax(logits), shape [B, 1].
inline Var softmax_entropy(Tape& t, Var logits)
{
    const Tensor& lv = t.value(logits);
    const std::size_t rows = lv.rows(), cols = lv.cols();
    Tensor out({rows, 1});
    std::vector<double> probs(lv.size()), logp(lv.size());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* x = &lv.values[r * cols];
        const double mx = *std::max_element(x, x + cols);
        double z = 0.0;
        for (std::size_t c = 0; c < cols; ++c) z += std::exp(x[c] - mx);
        const double lse = mx + std::log(z);
        double h = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            logp[r * cols + c] = x[c] - lse;
            probs[r * cols + c] = std::exp(logp[r * cols + c]);
            h -= probs[r * cols + c] * logp[r * cols + c];
        }
        out.values[r] = h;
    }
    return t.push(std::move(out), [logits, rows, cols, probs = std::move(probs), logp = std::move(logp)](
                                      Tape& tp, std::size_t self) {
        const auto& g = tp.grad(self);
        const Tensor& h = tp.value(Var{self});
        auto& gl = tp.grad(logits.id);
        // dH/dx_c = -p_c (log p_c + H)
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) {
                const std::size_t k = r * cols + c;
                gl[k] -= g[r] * probs[k] * (logp[k] + h.values[r]);
            }
    });
}

}  // namespace infobot::num
