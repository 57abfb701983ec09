#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace infobot::num {

class shape_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline std::string shape_string(const std::vector<std::size_t>& shape)
{
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

/// Dense row-major tensor of doubles. Rank 0-2 is all the policy needs; the
/// shape vector is kept general so serialized checkpoints stay honest.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> values;

    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shp, double fill = 0.0)
      : shape(std::move(shp)),
        values(element_count(shape), fill)
    { }

    Tensor(std::vector<std::size_t> shp, std::vector<double> vals)
      : shape(std::move(shp)),
        values(std::move(vals))
    {
        if (element_count(shape) != values.size()) {
            throw shape_error("tensor shape " + shape_string(shape) + " does not match "
                              + std::to_string(values.size()) + " values");
        }
    }

    static Tensor row(std::vector<double> vals)
    {
        const std::size_t n = vals.size();
        return Tensor({1, n}, std::move(vals));
    }

    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> vals)
    {
        return Tensor({rows, cols}, std::move(vals));
    }

    static Tensor scalar(double v) { return Tensor({1, 1}, std::vector<double>{v}); }

    static std::size_t element_count(const std::vector<std::size_t>& shp)
    {
        return std::accumulate(shp.begin(), shp.end(), std::size_t{1}, std::multiplies<>());
    }

    std::size_t size() const { return values.size(); }

    /// Leading dimension for rank-2 tensors; 1 otherwise.
    std::size_t rows() const { return shape.size() == 2 ? shape[0] : 1; }
    std::size_t cols() const { return shape.size() == 2 ? shape[1] : values.size(); }

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }

    double& operator()(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }

    bool all_finite() const
    {
        for (double v : values)
            if (!std::isfinite(v)) return false;
        return true;
    }

    void fill(double v) { std::fill(values.begin(), values.end(), v); }

    friend bool operator==(const Tensor&, const Tensor&) = default;
};

}  // namespace infobot::num
