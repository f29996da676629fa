#include "trgd/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace trgd {

void Tensor::check_shape() const {
    for (Index p : shape_) {
        if (p <= 0) throw std::invalid_argument("tensor dimensions must be positive");
    }
}

Tensor::Tensor(Shape shape, Vector data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape();
    if (data_.size() != shape_size(shape_)) throw std::invalid_argument("tensor data size does not match shape");
    if (!data_.allFinite()) throw std::invalid_argument("tensor entries must be finite");
}

Tensor Tensor::scalar(double v) {
    Tensor t;
    t.data_[0] = v;
    if (!std::isfinite(v)) throw std::invalid_argument("tensor entries must be finite");
    return t;
}

Tensor Tensor::constant(Shape shape, double v) {
    if (!std::isfinite(v)) throw std::invalid_argument("tensor entries must be finite");
    Tensor t(std::move(shape));
    t.data_.setConstant(v);
    return t;
}

Tensor Tensor::from_values(Shape shape, std::initializer_list<double> vals) {
    Vector v(static_cast<Index>(vals.size()));
    Index i = 0;
    for (double x : vals) v[i++] = x;
    return Tensor(std::move(shape), std::move(v));
}

double Tensor::as_scalar() const {
    if (order() != 0) throw std::logic_error("as_scalar on tensor of order > 0");
    return data_[0];
}

Index Tensor::offset(std::span<const Index> idx) const {
    if (idx.size() != shape_.size()) throw std::out_of_range("index order mismatch");
    Index off = 0, stride = 1;
    for (size_t k = 0; k < shape_.size(); ++k) {
        if (idx[k] < 0 || idx[k] >= shape_[k]) throw std::out_of_range("tensor index out of range");
        off += idx[k] * stride;
        stride *= shape_[k];
    }
    return off;
}

Tensor make_unchecked(Shape shape, Vector data) {
    return Tensor(std::move(shape), std::move(data), Tensor::Unchecked{});
}

namespace {

void check_mode(const Tensor& t, int mode) {
    if (mode < 0 || mode >= t.order()) throw std::out_of_range("mode index out of range");
}

}  // namespace

Matrix matricize(const Tensor& t, int mode) {
    check_mode(t, mode);
    const Index pk = t.dim(mode);
    const Index left = t.stride(mode);           // product of dims before `mode`
    const Index right = t.size() / (left * pk);  // product of dims after `mode`
    Matrix m(pk, left * right);
    const double* src = t.data();
    // flat = l + i*left + r*left*pk  ->  m(i, l + r*left)
    for (Index r = 0; r < right; ++r) {
        for (Index i = 0; i < pk; ++i) {
            const double* block = src + (r * pk + i) * left;
            for (Index l = 0; l < left; ++l) m(i, l + r * left) = block[l];
        }
    }
    return m;
}

Tensor dematricize(const Matrix& m, int mode, const Shape& shape) {
    const Index total = shape_size(shape);
    if (mode < 0 || mode >= static_cast<int>(shape.size())) throw std::out_of_range("mode index out of range");
    const Index pk = shape[static_cast<size_t>(mode)];
    if (m.rows() != pk || m.rows() * m.cols() != total)
        throw std::invalid_argument("matrix dimensions inconsistent with target shape");
    Index left = 1;
    for (int j = 0; j < mode; ++j) left *= shape[static_cast<size_t>(j)];
    const Index right = total / (left * pk);
    Vector out(total);
    for (Index r = 0; r < right; ++r) {
        for (Index i = 0; i < pk; ++i) {
            double* block = out.data() + (r * pk + i) * left;
            for (Index l = 0; l < left; ++l) block[l] = m(i, l + r * left);
        }
    }
    return make_unchecked(shape, std::move(out));
}

Tensor mode_product(const Tensor& t, const Matrix& m, int mode) {
    check_mode(t, mode);
    const Index pk = t.dim(mode);
    if (m.cols() != pk) throw std::invalid_argument("mode_product dimension mismatch");
    const Index q = m.rows();
    Shape out_shape = t.shape();
    out_shape[static_cast<size_t>(mode)] = q;

    const Index left = t.stride(mode);
    const Index right = t.size() / (left * pk);
    Vector out(left * q * right);
    if (mode == 0) {
        // contiguous case: one GEMM over the (p_0 x rest) view
        Eigen::Map<const Matrix> src(t.data(), pk, right);
        Eigen::Map<Matrix> dst(out.data(), q, right);
        dst.noalias() = m * src;
    } else {
        for (Index r = 0; r < right; ++r) {
            Eigen::Map<const Matrix> src(t.data() + r * left * pk, left, pk);
            Eigen::Map<Matrix> dst(out.data() + r * left * q, left, q);
            dst.noalias() = src * m.transpose();
        }
    }
    return make_unchecked(std::move(out_shape), std::move(out));
}

void mode_contract_into(const double* src, const Shape& shape, const Vector& v, int mode, double* dst) {
    const Index pk = shape[static_cast<size_t>(mode)];
    Index left = 1;
    for (int j = 0; j < mode; ++j) left *= shape[static_cast<size_t>(j)];
    Index right = 1;
    for (size_t j = static_cast<size_t>(mode) + 1; j < shape.size(); ++j) right *= shape[j];

    if (mode == 0) {
        for (Index r = 0; r < right; ++r) {
            const double* blk = src + r * pk;
            double acc = 0.0;
            for (Index i = 0; i < pk; ++i) acc += blk[i] * v[i];
            dst[r] = acc;
        }
        return;
    }
    for (Index r = 0; r < right; ++r) {
        const double* blk = src + r * left * pk;
        double* o = dst + r * left;
        for (Index l = 0; l < left; ++l) o[l] = blk[l] * v[0];
        for (Index i = 1; i < pk; ++i) {
            const double vi = v[i];
            const double* b = blk + i * left;
            for (Index l = 0; l < left; ++l) o[l] += b[l] * vi;
        }
    }
}

void apply_mode_transpose(const double* src, Index left, Index p, Index right, const Matrix& u, double* dst) {
    const Index r = u.cols();
    if (r == 1) {
        // contraction with a single column, keeping an implicit extent-1 mode
        const double* v = u.data();
        if (left == 1) {
            for (Index rr = 0; rr < right; ++rr) {
                const double* blk = src + rr * p;
                double acc = 0.0;
                for (Index i = 0; i < p; ++i) acc += blk[i] * v[i];
                dst[rr] = acc;
            }
            return;
        }
        for (Index rr = 0; rr < right; ++rr) {
            const double* blk = src + rr * left * p;
            double* o = dst + rr * left;
            for (Index l = 0; l < left; ++l) o[l] = blk[l] * v[0];
            for (Index i = 1; i < p; ++i) {
                const double vi = v[i];
                const double* b = blk + i * left;
                for (Index l = 0; l < left; ++l) o[l] += b[l] * vi;
            }
        }
        return;
    }
    if (left == 1) {
        Eigen::Map<const Matrix> s(src, p, right);
        Eigen::Map<Matrix> d(dst, r, right);
        d.noalias() = u.transpose() * s;
        return;
    }
    for (Index rr = 0; rr < right; ++rr) {
        Eigen::Map<const Matrix> s(src + rr * left * p, left, p);
        Eigen::Map<Matrix> d(dst + rr * left * r, left, r);
        d.noalias() = s * u;
    }
}

void unfold_mode_into(const double* src, Index left, Index p, Index right, Matrix& out) {
    for (Index r = 0; r < right; ++r) {
        for (Index i = 0; i < p; ++i) {
            const double* block = src + (r * p + i) * left;
            for (Index l = 0; l < left; ++l) out(i, l + r * left) = block[l];
        }
    }
}

Tensor mode_contract(const Tensor& t, const Vector& v, int mode) {
    check_mode(t, mode);
    if (v.size() != t.dim(mode)) throw std::invalid_argument("mode_contract dimension mismatch");
    Shape out_shape;
    out_shape.reserve(static_cast<size_t>(t.order()) - 1);
    for (int j = 0; j < t.order(); ++j)
        if (j != mode) out_shape.push_back(t.dim(j));
    Vector out(shape_size(out_shape));
    mode_contract_into(t.data(), t.shape(), v, mode, out.data());
    return make_unchecked(std::move(out_shape), std::move(out));
}

double pairwise_sum(std::span<const double> xs) {
    const size_t n = xs.size();
    if (n <= 16) {
        double acc = 0.0;
        for (double x : xs) acc += x;
        return acc;
    }
    const size_t half = n / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

namespace {

double pairwise_dot(const double* a, const double* b, Index n) {
    if (n <= 16) {
        double acc = 0.0;
        for (Index i = 0; i < n; ++i) acc += a[i] * b[i];
        return acc;
    }
    const Index half = n / 2;
    return pairwise_dot(a, b, half) + pairwise_dot(a + half, b + half, n - half);
}

}  // namespace

double inner_full(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("inner_full shape mismatch");
    return pairwise_dot(a.data(), b.data(), a.size());
}

Tensor inner_generalized(const Tensor& a, const Tensor& b) {
    const int d0 = b.order();
    if (d0 > a.order()) throw std::invalid_argument("inner_generalized: second operand has higher order");
    for (int k = 0; k < d0; ++k)
        if (a.dim(k) != b.dim(k)) throw std::invalid_argument("inner_generalized leading-shape mismatch");
    Shape out_shape(a.shape().begin() + d0, a.shape().end());
    const Index nb = b.size();
    const Index nout = a.size() / nb;
    Vector out(nout);
    for (Index j = 0; j < nout; ++j) out[j] = pairwise_dot(a.data() + j * nb, b.data(), nb);
    return make_unchecked(std::move(out_shape), std::move(out));
}

Tensor outer(const Tensor& a, const Tensor& b) {
    Shape out_shape = a.shape();
    out_shape.insert(out_shape.end(), b.shape().begin(), b.shape().end());
    Vector out(a.size() * b.size());
    Eigen::Map<Matrix> m(out.data(), a.size(), b.size());
    m.noalias() = a.flat() * b.flat().transpose();
    return make_unchecked(std::move(out_shape), std::move(out));
}

Matrix kronecker(std::span<const Matrix> ms) {
    if (ms.empty()) throw std::invalid_argument("kronecker of empty list");
    Matrix acc = ms[0];
    for (size_t i = 1; i < ms.size(); ++i) {
        const Matrix& b = ms[i];
        Matrix next(acc.rows() * b.rows(), acc.cols() * b.cols());
        for (Index r = 0; r < acc.rows(); ++r)
            for (Index c = 0; c < acc.cols(); ++c)
                next.block(r * b.rows(), c * b.cols(), b.rows(), b.cols()) = acc(r, c) * b;
        acc = std::move(next);
    }
    return acc;
}

double frobenius_norm(const Tensor& t) { return std::sqrt(inner_full(t, t)); }

}  // namespace trgd
