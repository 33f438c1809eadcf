#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nligen {

using Vec = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using VectorMap = Eigen::Map<Vec>;
using ConstVectorMap = Eigen::Map<const Vec>;

// Dense row-major array of doubles. Rank-1 tensors are treated as column
// vectors (rows = dims[0], cols = 1) by the matrix views.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> dims, double fill = 0.0);
    Tensor(std::vector<std::size_t> dims, std::vector<double> values);

    const std::vector<std::size_t>& dims() const { return dims_; }
    std::size_t rank() const { return dims_.size(); }
    std::size_t size() const { return values_.size(); }
    std::size_t rows() const { return dims_.empty() ? 0 : dims_[0]; }
    std::size_t cols() const;

    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }
    double& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }

    std::span<double> row(std::size_t r);
    std::span<const double> row(std::size_t r) const;

    MatrixMap matrix();
    ConstMatrixMap matrix() const;
    VectorMap vector();
    ConstVectorMap vector() const;

    void fill(double v);
    void set_zero() { fill(0.0); }
    bool all_finite() const;
    bool same_shape(const Tensor& other) const { return dims_ == other.dims_; }

    std::string shape_string() const;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    std::vector<std::size_t> dims_;
    std::vector<double> values_;
};

std::string shape_string(std::span<const std::size_t> dims);

} // namespace nligen
