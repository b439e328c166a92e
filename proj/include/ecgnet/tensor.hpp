#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace ecgnet {

/// Dense row-major float64 array.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

    const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::vector<double>& storage() noexcept { return data_; }
    const std::vector<double>& storage() const noexcept { return data_; }

    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

    // Rank-2 and rank-3 element access.
    double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
    double& at(std::size_t i, std::size_t j, std::size_t k) { return data_[(i * shape_[1] + j) * shape_[2] + k]; }
    double at(std::size_t i, std::size_t j, std::size_t k) const { return data_[(i * shape_[1] + j) * shape_[2] + k]; }

    /// Contiguous row [i, j, :] of a rank-3 tensor.
    std::span<double> row(std::size_t i, std::size_t j) {
        return std::span(data_).subspan((i * shape_[1] + j) * shape_[2], shape_[2]);
    }
    std::span<const double> row(std::size_t i, std::size_t j) const {
        return std::span(data_).subspan((i * shape_[1] + j) * shape_[2], shape_[2]);
    }

    void fill(double v);
    Tensor& operator+=(const Tensor& other);
    bool all_finite() const noexcept;

    /// Stacks equally shaped tensors along a new leading axis.
    static Tensor stack(std::span<const Tensor> items);
    /// Slice [index] along the leading axis.
    Tensor slice(std::size_t index) const;

    std::string shape_string() const;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

std::size_t shape_product(const std::vector<std::size_t>& shape) noexcept;

} // namespace ecgnet
