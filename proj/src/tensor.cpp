#include "saal/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace saal {

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
    if (shape_.empty()) {
        throw dimension_error("tensor shape must have at least one dimension");
    }
    std::size_t expected = 1;
    for (std::size_t d : shape_) {
        if (d == 0) throw dimension_error("tensor dimensions must be positive");
        expected *= d;
    }
    if (expected != values_.size()) {
        std::ostringstream os;
        os << "tensor shape " << shape_to_string(shape_) << " expects " << expected
           << " values, got " << values_.size();
        throw dimension_error(os.str());
    }
    ensure_finite("tensor construction");
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    return Tensor({rows, cols}, std::move(values));
}

std::size_t Tensor::rows() const {
    if (rank() == 1) return 1;
    if (rank() == 2) return shape_[0];
    throw dimension_error("rows() requires a rank-1 or rank-2 tensor");
}

std::size_t Tensor::cols() const {
    if (rank() == 1) return shape_[0];
    if (rank() == 2) return shape_[1];
    throw dimension_error("cols() requires a rank-1 or rank-2 tensor");
}

double Tensor::scalar_value() const {
    if (!is_scalar()) {
        throw contract_error("expected a scalar tensor, got shape " + shape_to_string(shape_));
    }
    return values_[0];
}

void Tensor::ensure_finite(const char* what) const {
    for (double v : values_) {
        if (!std::isfinite(v)) {
            throw numeric_error(std::string("non-finite value in ") + what);
        }
    }
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << ")";
    return os.str();
}

}  // namespace saal
