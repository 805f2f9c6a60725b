#pragma once

#include <cassert>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dcpa/errors.hpp"

namespace dcpa {

using Shape = std::vector<int>;

inline std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (int e : shape) {
        if (e <= 0) throw ShapeError("tensor extents must be positive, got " + std::to_string(e));
        n *= static_cast<std::size_t>(e);
    }
    return n;
}

inline std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

// Dense row-major tensor. Layout order is channels, height, width, with an
// extra leading extent (e.g. output channels of a kernel stack) where needed.
template <typename T>
class TensorT {
public:
    TensorT() = default;

    explicit TensorT(Shape shape)
        : shape_(std::move(shape)), data_(shape_numel(shape_), T(0)) {}

    TensorT(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (shape_numel(shape_) != data_.size()) {
            throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_str(shape_));
        }
    }

    static TensorT full(Shape shape, T value) {
        TensorT t(std::move(shape));
        for (T& v : t.data_) v = value;
        return t;
    }

    const Shape& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    std::size_t size() const { return data_.size(); }
    bool defined() const { return !shape_.empty(); }

    const T* data() const { return data_.data(); }
    T* data() { return data_.data(); }
    const std::vector<T>& vec() const { return data_; }

    T operator[](std::size_t i) const { return data_[i]; }
    T& operator[](std::size_t i) { return data_[i]; }

    // CHW element access.
    T at(int c, int y, int x) const {
        assert(rank() == 3);
        return data_[(static_cast<std::size_t>(c) * dim(1) + y) * dim(2) + x];
    }
    T& at(int c, int y, int x) {
        assert(rank() == 3);
        return data_[(static_cast<std::size_t>(c) * dim(1) + y) * dim(2) + x];
    }
    T at4(int o, int c, int y, int x) const {
        assert(rank() == 4);
        return data_[((static_cast<std::size_t>(o) * dim(1) + c) * dim(2) + y) * dim(3) + x];
    }
    T& at4(int o, int c, int y, int x) {
        assert(rank() == 4);
        return data_[((static_cast<std::size_t>(o) * dim(1) + c) * dim(2) + y) * dim(3) + x];
    }

    template <typename U>
    TensorT<U> cast() const {
        std::vector<U> out(data_.size());
        for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
        return TensorT<U>(shape_, std::move(out));
    }

private:
    Shape shape_;
    std::vector<T> data_;
};

using Tensor = TensorT<float>;

template <typename T>
bool same_shape(const TensorT<T>& a, const TensorT<T>& b) {
    return a.shape() == b.shape();
}

}  // namespace dcpa
