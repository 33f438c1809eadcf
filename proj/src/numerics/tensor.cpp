#include "nligen/numerics/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace nligen {

namespace {

std::size_t element_count(const std::vector<std::size_t>& dims) {
    if (dims.empty()) {
        throw std::invalid_argument("tensor must have at least one dimension");
    }
    for (std::size_t d : dims) {
        if (d == 0) {
            throw std::invalid_argument("tensor dimensions must be positive, got " + shape_string(dims));
        }
    }
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

} // namespace

Tensor::Tensor(std::vector<std::size_t> dims, double fill)
    : dims_(std::move(dims)), values_(element_count(dims_), fill) {}

Tensor::Tensor(std::vector<std::size_t> dims, std::vector<double> values)
    : dims_(std::move(dims)), values_(std::move(values)) {
    if (element_count(dims_) != values_.size()) {
        throw std::invalid_argument("tensor of shape " + nligen::shape_string(dims_) + " cannot hold " +
                                    std::to_string(values_.size()) + " values");
    }
}

std::size_t Tensor::cols() const {
    if (dims_.empty()) return 0;
    return values_.size() / dims_[0];
}

std::span<double> Tensor::row(std::size_t r) {
    const std::size_t c = cols();
    return {values_.data() + r * c, c};
}

std::span<const double> Tensor::row(std::size_t r) const {
    const std::size_t c = cols();
    return {values_.data() + r * c, c};
}

MatrixMap Tensor::matrix() {
    return MatrixMap(values_.data(), static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols()));
}

ConstMatrixMap Tensor::matrix() const {
    return ConstMatrixMap(values_.data(), static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols()));
}

VectorMap Tensor::vector() {
    return VectorMap(values_.data(), static_cast<Eigen::Index>(values_.size()));
}

ConstVectorMap Tensor::vector() const {
    return ConstVectorMap(values_.data(), static_cast<Eigen::Index>(values_.size()));
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool Tensor::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

std::string Tensor::shape_string() const { return nligen::shape_string(dims_); }

std::string shape_string(std::span<const std::size_t> dims) {
    std::string out = "[";
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(dims[i]);
    }
    return out + "]";
}

} // namespace nligen
