#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "modcomp/error.hpp"

namespace modcomp {

// Dense row-major f32 tensor. Rank 1 or 2 is all the model needs.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);
    Tensor(std::vector<int> shape, std::vector<float> data);

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<int> shape, float value);

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
    int rows() const;
    int cols() const;

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    float& at(std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    float at(std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }
    float& at(int r, int c) { return data_[static_cast<std::size_t>(r) * cols() + c]; }
    float at(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols() + c]; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;
    std::string shape_str() const;

    bool operator==(const Tensor& other) const {
        return shape_ == other.shape_ && data_ == other.data_;
    }

private:
    std::vector<int> shape_;
    std::vector<float> data_;
};

std::int64_t shape_numel(const std::vector<int>& shape);

// c = a * b for a[m x k], b[k x n]. Throws ShapeError on mismatched inner dims.
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float s);
void add_inplace(Tensor& a, const Tensor& b);
void axpy_inplace(Tensor& a, float s, const Tensor& b);  // a += s * b

// Mean negative log-softmax over unmasked target positions. logits[T x V],
// targets[T] in [0, V), mask[T] nonzero where the position contributes.
// Accumulated in double; throws DataError if every position is masked out.
double cross_entropy(const Tensor& logits, const std::vector<int>& targets,
                     const std::vector<std::uint8_t>& mask);

// dL/dlogits for the same reduction.
Tensor cross_entropy_grad(const Tensor& logits, const std::vector<int>& targets,
                          const std::vector<std::uint8_t>& mask);

}  // namespace modcomp
