#include "metasum/diff/tensor.hpp"

#include "metasum/error.hpp"

#include <algorithm>

namespace metasum::diff {

std::size_t numel(const Shape& shape)
{
    std::size_t n = 1;
    for (auto d : shape)
        n *= d;
    return n;
}

std::string to_string(const Shape& shape)
{
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i)
        s += (i ? ", " : "") + std::to_string(shape[i]);
    return s + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(numel(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), data_(std::move(values))
{
    require(data_.size() == numel(shape_), ErrorKind::shape,
            "Tensor: " + std::to_string(data_.size()) + " values for shape " + diff::to_string(shape_));
}

double Tensor::item() const
{
    require(data_.size() == 1, ErrorKind::shape, "Tensor::item on shape " + diff::to_string(shape_));
    return data_[0];
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor Tensor::reshaped(Shape shape) const
{
    require(numel(shape) == data_.size(), ErrorKind::shape,
            "reshape: " + diff::to_string(shape_) + " -> " + diff::to_string(shape));
    return Tensor(std::move(shape), data_);
}

} // namespace metasum::diff
