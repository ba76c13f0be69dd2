#include "modcomp/tensor.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

namespace modcomp {

namespace {

using MatrixRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatrixRM>;
using ConstMapRM = Eigen::Map<const MatrixRM>;

void check_shape_positive(const std::vector<int>& shape) {
    if (shape.empty()) throw ShapeError("tensor shape must have at least one dimension");
    for (int d : shape) {
        if (d <= 0) throw ShapeError("tensor dimensions must be positive");
    }
}

}  // namespace

std::int64_t shape_numel(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
}

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    check_shape_positive(shape_);
    data_.assign(static_cast<std::size_t>(shape_numel(shape_)), 0.0f);
}

Tensor::Tensor(std::vector<int> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape_positive(shape_);
    if (shape_numel(shape_) != static_cast<std::int64_t>(data_.size())) {
        throw ShapeError("tensor data length does not match shape " + shape_str());
    }
}

Tensor Tensor::full(std::vector<int> shape, float value) {
    Tensor t(std::move(shape));
    for (std::int64_t i = 0; i < t.size(); ++i) t.at(i) = value;
    return t;
}

int Tensor::rows() const {
    if (rank() != 2) throw ShapeError("rows() on tensor of rank " + std::to_string(rank()));
    return shape_[0];
}

int Tensor::cols() const {
    if (rank() != 2) throw ShapeError("cols() on tensor of rank " + std::to_string(rank()));
    return shape_[1];
}

bool Tensor::all_finite() const {
    for (float v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) os << "x";
        os << shape_[i];
    }
    os << "]";
    return os.str();
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) {
        throw ShapeError("matmul needs rank-2 tensors, got " + a.shape_str() + " and " + b.shape_str());
    }
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul inner dimensions disagree: " + a.shape_str() + " * " + b.shape_str());
    }
    Tensor c({a.rows(), b.cols()});
    MapRM(c.data(), c.rows(), c.cols()).noalias() =
        ConstMapRM(a.data(), a.rows(), a.cols()) * ConstMapRM(b.data(), b.rows(), b.cols());
    return c;
}

Tensor add(const Tensor& a, const Tensor& b) {
    Tensor c = a;
    add_inplace(c, b);
    return c;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw ShapeError("sub shape mismatch: " + a.shape_str() + " vs " + b.shape_str());
    Tensor c = a;
    for (std::int64_t i = 0; i < c.size(); ++i) c.at(i) -= b.at(i);
    return c;
}

Tensor scale(const Tensor& a, float s) {
    Tensor c = a;
    for (std::int64_t i = 0; i < c.size(); ++i) c.at(i) *= s;
    return c;
}

void add_inplace(Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw ShapeError("add shape mismatch: " + a.shape_str() + " vs " + b.shape_str());
    for (std::int64_t i = 0; i < a.size(); ++i) a.at(i) += b.at(i);
}

void axpy_inplace(Tensor& a, float s, const Tensor& b) {
    if (!a.same_shape(b)) throw ShapeError("axpy shape mismatch: " + a.shape_str() + " vs " + b.shape_str());
    for (std::int64_t i = 0; i < a.size(); ++i) a.at(i) += s * b.at(i);
}

double cross_entropy(const Tensor& logits, const std::vector<int>& targets,
                     const std::vector<std::uint8_t>& mask) {
    if (logits.rank() != 2) throw ShapeError("cross_entropy expects [T x V] logits");
    const int T = logits.rows();
    const int V = logits.cols();
    if (static_cast<int>(targets.size()) != T || static_cast<int>(mask.size()) != T) {
        throw ShapeError("cross_entropy targets/mask length must match logit rows");
    }
    double total = 0.0;
    std::int64_t count = 0;
    for (int t = 0; t < T; ++t) {
        if (!mask[t]) continue;
        if (targets[t] < 0 || targets[t] >= V) {
            throw DataError("cross_entropy target out of vocabulary at position " + std::to_string(t));
        }
        float mx = logits.at(t, 0);
        for (int v = 1; v < V; ++v) mx = std::max(mx, logits.at(t, v));
        double denom = 0.0;
        for (int v = 0; v < V; ++v) denom += std::exp(static_cast<double>(logits.at(t, v) - mx));
        total += std::log(denom) - static_cast<double>(logits.at(t, targets[t]) - mx);
        ++count;
    }
    if (count == 0) throw DataError("cross_entropy: every position is masked out");
    return total / static_cast<double>(count);
}

Tensor cross_entropy_grad(const Tensor& logits, const std::vector<int>& targets,
                          const std::vector<std::uint8_t>& mask) {
    const int T = logits.rows();
    const int V = logits.cols();
    std::int64_t count = 0;
    for (int t = 0; t < T; ++t) {
        if (mask[t]) ++count;
    }
    if (count == 0) throw DataError("cross_entropy_grad: every position is masked out");
    Tensor grad({T, V});
    const float inv = 1.0f / static_cast<float>(count);
    for (int t = 0; t < T; ++t) {
        if (!mask[t]) continue;
        float mx = logits.at(t, 0);
        for (int v = 1; v < V; ++v) mx = std::max(mx, logits.at(t, v));
        double denom = 0.0;
        for (int v = 0; v < V; ++v) denom += std::exp(static_cast<double>(logits.at(t, v) - mx));
        for (int v = 0; v < V; ++v) {
            float p = static_cast<float>(std::exp(static_cast<double>(logits.at(t, v) - mx)) / denom);
            grad.at(t, v) = (p - (v == targets[t] ? 1.0f : 0.0f)) * inv;
        }
    }
    return grad;
}

}  // namespace modcomp
