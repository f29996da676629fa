#pragma once

#include <Eigen/Dense>

#include <initializer_list>
#include <span>
#include <vector>

namespace trgd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using Shape = std::vector<Index>;

inline Index shape_size(const Shape& s) {
    Index n = 1;
    for (Index p : s) n *= p;
    return n;
}

// Dense real tensor of order d >= 0 in canonical layout: the first index
// varies fastest, so the flat offset of (i_0,...,i_{d-1}) is
// sum_k i_k * stride_k with stride_0 = 1 and stride_k = p_0 * ... * p_{k-1}.
// An order-0 tensor is a scalar (empty shape, one entry).
class Tensor {
public:
    Tensor() : shape_{}, data_(1) { data_[0] = 0.0; }
    explicit Tensor(Shape shape) : shape_(std::move(shape)), data_(Vector::Zero(shape_size(shape_))) {
        check_shape();
    }
    Tensor(Shape shape, Vector data);  // validates size and finiteness

    static Tensor scalar(double v);
    static Tensor constant(Shape shape, double v);
    static Tensor from_values(Shape shape, std::initializer_list<double> vals);

    int order() const { return static_cast<int>(shape_.size()); }
    const Shape& shape() const { return shape_; }
    Index dim(int k) const { return shape_[static_cast<size_t>(k)]; }
    Index size() const { return data_.size(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    Vector& flat() { return data_; }
    const Vector& flat() const { return data_; }

    double& operator[](Index i) { return data_[i]; }
    double operator[](Index i) const { return data_[i]; }

    // multi-index access, mostly for tests and small-scale setup
    double& at(std::span<const Index> idx) { return data_[offset(idx)]; }
    double at(std::span<const Index> idx) const { return data_[offset(idx)]; }
    double& at(std::initializer_list<Index> idx) { return at(std::span<const Index>(idx.begin(), idx.size())); }
    double at(std::initializer_list<Index> idx) const {
        return data_[offset(std::span<const Index>(idx.begin(), idx.size()))];
    }

    Index stride(int k) const {
        Index s = 1;
        for (int j = 0; j < k; ++j) s *= shape_[static_cast<size_t>(j)];
        return s;
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    bool all_finite() const { return data_.allFinite(); }

    double as_scalar() const;  // order-0 only

private:
    Index offset(std::span<const Index> idx) const;
    void check_shape() const;

    Shape shape_;
    Vector data_;

    struct Unchecked {};
    Tensor(Shape shape, Vector data, Unchecked) : shape_(std::move(shape)), data_(std::move(data)) {}
    friend Tensor make_unchecked(Shape, Vector);
};

// Internal constructor for operation results; skips the finiteness scan so
// that divergence shows up as NaN iterates instead of deep exceptions.
Tensor make_unchecked(Shape shape, Vector data);

// Mode-k matricization: rows are mode-k fibers, columns ordered by the
// remaining indices with lower modes varying fastest.
Matrix matricize(const Tensor& t, int mode);

// Inverse of matricize for the given mode and target shape.
Tensor dematricize(const Matrix& m, int mode, const Shape& shape);

// Mode-k product t x_k m; requires m.cols() == dim_k, replaces it by m.rows().
Tensor mode_product(const Tensor& t, const Matrix& m, int mode);

// Contraction of mode k with a vector (the rows(m) == 1 case with the
// singleton mode dropped). Hot path of the per-sample gradient kernels.
Tensor mode_contract(const Tensor& t, const Vector& v, int mode);
void mode_contract_into(const double* src, const Shape& shape, const Vector& v, int mode, double* dst);

// Raw-buffer kernels for the per-sample gradient loops. The mode extent is
// given by (left, p, right) products; dst must not alias src.
// dst = src x_mode u^T, replacing extent p by u.cols().
void apply_mode_transpose(const double* src, Index left, Index p, Index right, const Matrix& u, double* dst);
// Mode unfolding into a preallocated (p x left*right) matrix.
void unfold_mode_into(const double* src, Index left, Index p, Index right, Matrix& out);

// Frobenius inner product of equal-shaped tensors (pairwise summation).
double inner_full(const Tensor& a, const Tensor& b);

// Generalized inner product: contracts the leading order(b) modes of a
// against b; order d == d0 yields an order-0 tensor.
Tensor inner_generalized(const Tensor& a, const Tensor& b);

// Outer product; the modes of a precede (vary faster than) the modes of b.
Tensor outer(const Tensor& a, const Tensor& b);

// Kronecker product of the given matrices, folded left to right.
Matrix kronecker(std::span<const Matrix> ms);

double frobenius_norm(const Tensor& t);

// Deterministic tree reduction; summation order is independent of how the
// caller might partition work across threads.
double pairwise_sum(std::span<const double> xs);

}  // namespace trgd
