#include "discnn/tensor.hpp"

#include <cmath>
#include <sstream>

namespace discnn::num {

std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ')';
    return os.str();
}

std::size_t Tensor::checked_product(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (std::size_t axis = 0; axis < shape.size(); ++axis) {
        if (shape[axis] <= 0) {
            throw ShapeError("tensor shape " + shape_str(shape) + " has non-positive dimension at axis " +
                             std::to_string(axis));
        }
        n *= static_cast<std::size_t>(shape[axis]);
    }
    return n;
}

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    values.assign(checked_product(shape_), 0.0);
}

Tensor::Tensor(std::vector<int> shape, std::vector<double> vals) : values(std::move(vals)), shape_(std::move(shape)) {
    const std::size_t expect = checked_product(shape_);
    if (values.size() != expect) {
        throw ShapeError("tensor value count " + std::to_string(values.size()) + " does not match shape " +
                         shape_str(shape_) + " (expected " + std::to_string(expect) + ")");
    }
}

Tensor Tensor::full(std::vector<int> shape, double value) {
    Tensor t(std::move(shape));
    std::fill(t.values.begin(), t.values.end(), value);
    return t;
}

int Tensor::dim(int axis) const {
    if (axis < 0 || axis >= rank()) {
        throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + shape_str(shape_));
    }
    return shape_[static_cast<std::size_t>(axis)];
}

void Tensor::ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
}

void Tensor::zero_grad() {
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
}

Tensor Tensor::reshaped(std::vector<int> new_shape) const {
    const std::size_t expect = checked_product(new_shape);
    if (expect != values.size()) {
        throw ShapeError("cannot reshape " + shape_str(shape_) + " into " + shape_str(new_shape) +
                         ": element counts differ");
    }
    return Tensor(std::move(new_shape), values);
}

bool Tensor::all_finite() const {
    for (double v : values) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tensor::require_finite(const std::string& what) const {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            throw DataError(what + ": non-finite value " + std::to_string(values[i]) + " at flat index " +
                            std::to_string(i));
        }
    }
}

}  // namespace discnn::num
