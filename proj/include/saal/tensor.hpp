#pragma once

#include <cstddef>
#include <vector>

#include "saal/errors.hpp"

namespace saal {

// Dense row-major tensor of 64-bit floats. Value semantics; shapes are
// sequences of positive dimension sizes and product(shape) == values.size().
// Public operations keep every entry finite and raise numeric_error otherwise.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::vector<std::size_t> shape, std::vector<double> values);

    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor full(std::vector<std::size_t> shape, double value);
    static Tensor scalar(double value);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return values_.size(); }

    // Rank-2 helpers. Rank-1 tensors are treated as a single row.
    std::size_t rows() const;
    std::size_t cols() const;

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }
    double& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool is_scalar() const { return size() == 1; }
    double scalar_value() const;

    // Throws numeric_error naming `what` if any entry is NaN/Inf.
    void ensure_finite(const char* what) const;

    bool operator==(const Tensor& other) const {
        return shape_ == other.shape_ && values_ == other.values_;
    }

private:
    std::vector<std::size_t> shape_;
    std::vector<double> values_;
};

std::string shape_to_string(const std::vector<std::size_t>& shape);

}  // namespace saal
