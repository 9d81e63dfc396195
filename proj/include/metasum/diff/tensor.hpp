#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace metasum::diff {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

/// Dense row-major array of doubles.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> values);

    static Tensor scalar(double v) { return Tensor({1}, std::vector<double>{v}); }

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    /// Value of a single-element tensor.
    double item() const;

    void fill(double v);
    Tensor reshaped(Shape shape) const;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

} // namespace metasum::diff
