#include "ecgnet/tensor.hpp"

#include "ecgnet/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace ecgnet {

std::size_t shape_product(const std::vector<std::size_t>& shape) noexcept {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(shape_product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_product(shape_) != data_.size())
        throw ShapeError("tensor data has " + std::to_string(data_.size()) + " values for shape " + shape_string());
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor& Tensor::operator+=(const Tensor& other) {
    if (other.shape_ != shape_) throw ShapeError("cannot add " + other.shape_string() + " to " + shape_string());
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

bool Tensor::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor Tensor::stack(std::span<const Tensor> items) {
    if (items.empty()) throw ShapeError("cannot stack zero tensors");
    std::vector<std::size_t> shape{items.size()};
    shape.insert(shape.end(), items.front().shape_.begin(), items.front().shape_.end());
    Tensor out(shape);
    const auto stride = items.front().size();
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i].shape_ != items.front().shape_) throw ShapeError("stack of mismatched shapes");
        std::copy(items[i].data_.begin(), items[i].data_.end(), out.data_.begin() + static_cast<std::ptrdiff_t>(i * stride));
    }
    return out;
}

Tensor Tensor::slice(std::size_t index) const {
    if (shape_.empty() || index >= shape_[0]) throw ShapeError("slice index out of range");
    std::vector<std::size_t> shape(shape_.begin() + 1, shape_.end());
    const auto stride = shape_product(shape);
    const auto first = data_.begin() + static_cast<std::ptrdiff_t>(index * stride);
    return Tensor(shape, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(stride)));
}

std::string Tensor::shape_string() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) s += (i ? "x" : "") + std::to_string(shape_[i]);
    return s + "]";
}

} // namespace ecgnet
