#include "trgd/gradients.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace trgd {

TruncationLevel TruncationLevel::finite(double t) {
    if (!(t > 0)) throw std::invalid_argument("truncation level must be positive");
    return {t};
}

namespace {

inline void clamp_block(double* p, Index n, double tau) {
    for (Index i = 0; i < n; ++i) {
        const double x = p[i];
        p[i] = x > tau ? tau : (x < -tau ? -tau : x);
    }
}

#ifndef NDEBUG
inline void assert_bounded(const double* p, Index n, double tau) {
    for (Index i = 0; i < n; ++i) assert(!(std::fabs(p[i]) > tau) || std::isnan(p[i]));
}
#endif

// Binary-counter pairwise accumulation: a deterministic reduction tree that
// depends only on the number of summands.
struct PairwiseAccumulator {
    std::vector<Vector> levels;
    std::vector<char> occupied;
    Vector carry;

    void reset(Index dim) {
        if (levels.empty() || levels[0].size() != dim) {
            levels.assign(40, Vector(dim));
            carry.resize(dim);
        }
        occupied.assign(40, 0);
    }

    void add(const Vector& x) {
        carry = x;
        size_t l = 0;
        while (occupied[l]) {
            carry += levels[l];
            occupied[l] = 0;
            ++l;
        }
        levels[l] = carry;
        occupied[l] = 1;
    }

    Vector total(Index dim) const {
        Vector acc = Vector::Zero(dim);
        for (size_t l = 0; l < occupied.size(); ++l)
            if (occupied[l]) acc += levels[l];
        return acc;
    }
};

// One projection chain: the full multilinear projection of a tensor by all
// factor transposes plus, for every mode, the projection that skips it.
struct ChainMeta {
    int q = 0;                       // number of modes
    std::vector<Index> dims;         // raw extents p_j
    std::vector<Index> ranks;        // projected extents r_j
    std::vector<Index> chain_left;   // left product before applying mode j
    std::vector<Index> chain_right;  // right product after mode j
    Index full_size = 0;             // prod r_j
    std::vector<Index> skip_size;    // size of the skip-k projection

    void setup(const Shape& dims_in, const std::vector<Matrix>& us, int first_mode) {
        q = static_cast<int>(dims_in.size());
        dims.assign(dims_in.begin(), dims_in.end());
        ranks.resize(static_cast<size_t>(q));
        for (int j = 0; j < q; ++j) ranks[static_cast<size_t>(j)] = us[static_cast<size_t>(first_mode + j)].cols();
        chain_left.resize(static_cast<size_t>(q));
        chain_right.resize(static_cast<size_t>(q));
        for (int j = 0; j < q; ++j) {
            Index l = 1, r = 1;
            for (int s = 0; s < j; ++s) l *= ranks[static_cast<size_t>(s)];
            for (int s = j + 1; s < q; ++s) r *= dims[static_cast<size_t>(s)];
            chain_left[static_cast<size_t>(j)] = l;
            chain_right[static_cast<size_t>(j)] = r;
        }
        full_size = 1;
        for (int j = 0; j < q; ++j) full_size *= ranks[static_cast<size_t>(j)];
        skip_size.resize(static_cast<size_t>(q));
        for (int k = 0; k < q; ++k)
            skip_size[static_cast<size_t>(k)] = full_size / ranks[static_cast<size_t>(k)] * dims[static_cast<size_t>(k)];
    }
};

struct ChainBuffers {
    std::vector<Vector> chain;      // chain[j]: modes < j projected
    std::vector<Vector> skip;       // skip[k]: all modes except k projected
    Vector ping, pong;

    void setup(const ChainMeta& m) {
        chain.resize(static_cast<size_t>(m.q) + 1);
        Index sz = 1;
        for (int j = 0; j < m.q; ++j) sz *= m.dims[static_cast<size_t>(j)];
        Index maxsz = sz;
        for (int j = 0; j < m.q; ++j) {
            sz = sz / m.dims[static_cast<size_t>(j)] * m.ranks[static_cast<size_t>(j)];
            chain[static_cast<size_t>(j) + 1].resize(sz);
            maxsz = std::max(maxsz, sz);
        }
        skip.resize(static_cast<size_t>(m.q));
        for (int k = 0; k < m.q; ++k) skip[static_cast<size_t>(k)].resize(m.skip_size[static_cast<size_t>(k)]);
        ping.resize(maxsz);
        pong.resize(maxsz);
    }
};

// Runs the projection chain for one sample. `us` are the factor matrices for
// these modes (indexed from first_mode). Afterwards buffers.chain[q] holds
// the full projection and buffers.skip[k] the skip-k projections.
void run_chain(const double* src, const ChainMeta& m, const std::vector<Matrix>& us, int first_mode,
               ChainBuffers& b, bool want_skips) {
    const double* cur = src;
    for (int j = 0; j < m.q; ++j) {
        Vector& out = b.chain[static_cast<size_t>(j) + 1];
        apply_mode_transpose(cur, m.chain_left[static_cast<size_t>(j)], m.dims[static_cast<size_t>(j)],
                             m.chain_right[static_cast<size_t>(j)], us[static_cast<size_t>(first_mode + j)], out.data());
        cur = out.data();
    }
    if (!want_skips) return;
    for (int k = 0; k < m.q; ++k) {
        // start from chain[k] (modes < k projected) and apply modes k+1..q-1
        const double* c = (k == 0) ? src : b.chain[static_cast<size_t>(k)].data();
        Index left = m.chain_left[static_cast<size_t>(k)] * m.dims[static_cast<size_t>(k)];
        Index right = 1;
        for (int s = k + 1; s < m.q; ++s) right *= m.dims[static_cast<size_t>(s)];
        double* dst = nullptr;
        const double* srcp = c;
        for (int j = k + 1; j < m.q; ++j) {
            const Index pj = m.dims[static_cast<size_t>(j)];
            const Index rj = m.ranks[static_cast<size_t>(j)];
            right /= pj;
            const bool last = (j == m.q - 1);
            dst = last ? b.skip[static_cast<size_t>(k)].data() : ((j - k) % 2 == 1 ? b.ping.data() : b.pong.data());
            apply_mode_transpose(srcp, left, pj, right, us[static_cast<size_t>(first_mode + j)], dst);
            left *= rj;
            srcp = dst;
        }
        if (k == m.q - 1) b.skip[static_cast<size_t>(k)] = Eigen::Map<const Vector>(c, m.skip_size[static_cast<size_t>(k)]);
    }
}

struct BlockLayout {
    Index core_size = 0;
    std::vector<Index> factor_offsets;
    std::vector<Index> factor_sizes;
    Index total = 0;

    void setup(const TuckerFactors& f) {
        core_size = f.core.size();
        total = core_size;
        factor_offsets.clear();
        factor_sizes.clear();
        for (const Matrix& u : f.factors) {
            factor_offsets.push_back(total);
            factor_sizes.push_back(u.size());
            total += u.size();
        }
    }
};

GradientSet assemble(const Vector& flat, const TuckerFactors& f, const BlockLayout& lay) {
    GradientSet g;
    g.core_grad = make_unchecked(f.core.shape(), flat.head(lay.core_size));
    g.factor_grads.reserve(f.factors.size());
    for (size_t k = 0; k < f.factors.size(); ++k) {
        const Matrix& u = f.factors[k];
        g.factor_grads.emplace_back(Eigen::Map<const Matrix>(flat.data() + lay.factor_offsets[k], u.rows(), u.cols()));
    }
    return g;
}

}  // namespace

struct GradientScratch::Impl {
    ChainMeta cov_meta, resp_meta;
    ChainBuffers cov_buf, resp_buf;
    BlockLayout layout;
    PairwiseAccumulator acc;
    Vector summand;
    Vector pred, resid, ts, vresp, predk, residk, wfull;
    std::vector<Matrix> unf_skip;  // unfolded skip-k projection per mode
    std::vector<Matrix> unf_small; // unfolded rank-sized tensor per mode
    std::vector<Matrix> smat;      // mode-k core unfoldings
    std::vector<Vector> bk;        // per response mode: core with U_k applied at k
    Vector bmat;                   // core with response Grams applied
    Matrix amat;                   // reconstruction, covariate x response view
    Tensor d0_tensor;
    std::vector<Matrix> dk;
};

GradientScratch::GradientScratch() : impl_(std::make_unique<Impl>()) {}
GradientScratch::~GradientScratch() = default;
GradientScratch::GradientScratch(GradientScratch&&) noexcept = default;
GradientScratch& GradientScratch::operator=(GradientScratch&&) noexcept = default;

Tensor truncate_entrywise(const Tensor& t, TruncationLevel tau) {
    Tensor out = t;
    if (tau.is_finite()) clamp_block(out.data(), out.size(), tau.tau);
    return out;
}

Matrix truncate_entrywise(const Matrix& m, TruncationLevel tau) {
    Matrix out = m;
    if (tau.is_finite()) clamp_block(out.data(), out.size(), tau.tau);
    return out;
}

namespace {

using ScratchImpl = GradientScratch::Impl;

ScratchImpl& ensure_scratch(GradientScratch*& user, std::unique_ptr<GradientScratch>& local) {
    if (!user) {
        local = std::make_unique<GradientScratch>();
        user = local.get();
    }
    return user->impl();
}

void check_against_factors(const TuckerFactors& f, const Shape& shape, int first_mode, const char* what) {
    for (size_t j = 0; j < shape.size(); ++j) {
        if (shape[j] != f.factors[static_cast<size_t>(first_mode) + j].rows())
            throw std::invalid_argument(std::string(what) + " shape does not match factors");
    }
}

// Shared driver for the least-squares family. Entrywise mode truncates each
// sample's gradient blocks at tau; Huber mode truncates the full-space
// residual at nu instead and leaves the blocks alone.
GradientSet linear_family(const TuckerFactors& f, const RegressionData& data, double tau, bool huber, double nu,
                          GradientScratch* scratch) {
    f.validate();
    if (data.xs.empty() || data.xs.size() != data.ys.size())
        throw std::invalid_argument("regression data must be nonempty with matching covariates and responses");
    const int d = f.order();
    const int d0 = data.d0;
    if (d0 < 0 || d0 > d) throw std::invalid_argument("covariate order d0 out of range");
    check_against_factors(f, data.xs[0].shape(), 0, "covariate");
    check_against_factors(f, data.ys[0].shape(), d0, "response");

    std::unique_ptr<GradientScratch> local;
    ScratchImpl& ws = ensure_scratch(scratch, local);

    ws.cov_meta.setup(data.xs[0].shape(), f.factors, 0);
    ws.resp_meta.setup(data.ys[0].shape(), f.factors, d0);
    ws.cov_buf.setup(ws.cov_meta);
    ws.resp_buf.setup(ws.resp_meta);
    ws.layout.setup(f);
    ws.acc.reset(ws.layout.total);
    ws.summand.resize(ws.layout.total);

    const Index pc = ws.cov_meta.full_size;   // prod of covariate ranks
    const Index pr = ws.resp_meta.full_size;  // prod of response ranks
    Eigen::Map<const Matrix> score(f.core.data(), pc, pr);

    // per-call precomputations
    ws.smat.resize(static_cast<size_t>(d));
    ws.unf_skip.resize(static_cast<size_t>(d));
    ws.unf_small.resize(static_cast<size_t>(d));
    for (int k = 0; k < d; ++k) {
        const Index rk = f.core.dim(k);
        const Index pk = f.factors[static_cast<size_t>(k)].rows();
        ws.smat[static_cast<size_t>(k)] = matricize(f.core, k);
        ws.unf_skip[static_cast<size_t>(k)].resize(pk, (k < d0 ? pc / rk : pr / rk));
        ws.unf_small[static_cast<size_t>(k)].resize(rk, (k < d0 ? pc / rk : pr / rk));
    }

    Tensor a_full;  // Huber only
    if (huber) {
        a_full = reconstruct(f);
        ws.wfull.resize(data.ys[0].size());
    } else {
        // B = core with U^T U applied on every response mode
        Tensor b = f.core;
        for (int k = d0; k < d; ++k) {
            const Matrix& u = f.factors[static_cast<size_t>(k)];
            b = mode_product(b, Matrix(u.transpose() * u), k);
        }
        ws.bmat = b.flat();
        ws.bk.resize(static_cast<size_t>(d));
        for (int k = d0; k < d; ++k) {
            Tensor t = mode_product(f.core, f.factors[static_cast<size_t>(k)], k);
            for (int j = d0; j < d; ++j) {
                if (j == k) continue;
                const Matrix& u = f.factors[static_cast<size_t>(j)];
                t = mode_product(t, Matrix(u.transpose() * u), j);
            }
            ws.bk[static_cast<size_t>(k)] = t.flat();
        }
        ws.pred.resize(pr);
    }
    ws.resid.resize(pr);
    ws.ts.resize(pc);
    ws.vresp.resize(pr);

    const size_t n = data.n();
    for (size_t i = 0; i < n; ++i) {
        const Tensor& x = data.xs[i];
        const Tensor& y = data.ys[i];
        run_chain(x.data(), ws.cov_meta, f.factors, 0, ws.cov_buf, true);
        const double* xbar = (d0 == 0) ? x.data() : ws.cov_buf.chain[static_cast<size_t>(d0)].data();
        Eigen::Map<const Vector> xbar_v(xbar, pc);

        if (huber) {
            // residual truncation in the full response space
            Eigen::Map<const Matrix> am(a_full.data(), x.size(), y.size());
            ws.wfull.noalias() = am.transpose() * x.flat();
            ws.wfull -= y.flat();
            clamp_block(ws.wfull.data(), ws.wfull.size(), nu);
            run_chain(ws.wfull.data(), ws.resp_meta, f.factors, d0, ws.resp_buf, true);
            ws.resid = (d - d0 == 0) ? ws.wfull : ws.resp_buf.chain[static_cast<size_t>(d - d0)];
        } else {
            run_chain(y.data(), ws.resp_meta, f.factors, d0, ws.resp_buf, true);
            const double* ybar = (d - d0 == 0) ? y.data() : ws.resp_buf.chain[static_cast<size_t>(d - d0)].data();
            Eigen::Map<const Matrix> bm(ws.bmat.data(), pc, pr);
            ws.pred.noalias() = bm.transpose() * xbar_v;
            ws.resid = ws.pred - Eigen::Map<const Vector>(ybar, pr);
        }

        // core block
        Eigen::Map<Matrix> coreblk(ws.summand.data(), pc, pr);
        coreblk.noalias() = xbar_v * ws.resid.transpose();

        // covariate modes: unfold(skip_k) * unfold(core contracted with resid)^T
        ws.ts.noalias() = score * ws.resid;
        for (int k = 0; k < d0; ++k) {
            const Index rk = ws.cov_meta.ranks[static_cast<size_t>(k)];
            const Index pk = ws.cov_meta.dims[static_cast<size_t>(k)];
            Index left = 1, right = 1;
            for (int s = 0; s < k; ++s) left *= ws.cov_meta.ranks[static_cast<size_t>(s)];
            for (int s = k + 1; s < d0; ++s) right *= ws.cov_meta.ranks[static_cast<size_t>(s)];
            Matrix& ux = ws.unf_skip[static_cast<size_t>(k)];
            Matrix& ut = ws.unf_small[static_cast<size_t>(k)];
            unfold_mode_into(ws.cov_buf.skip[static_cast<size_t>(k)].data(), left, pk, right, ux);
            unfold_mode_into(ws.ts.data(), left, rk, right, ut);
            Eigen::Map<Matrix> blk(ws.summand.data() + ws.layout.factor_offsets[static_cast<size_t>(k)], pk, rk);
            blk.noalias() = ux * ut.transpose();
        }

        // response modes
        if (d0 < d) {
            ws.vresp.noalias() = score.transpose() * xbar_v;
            for (int k = d0; k < d; ++k) {
                const int kl = k - d0;
                const Index rk = ws.resp_meta.ranks[static_cast<size_t>(kl)];
                const Index pk = ws.resp_meta.dims[static_cast<size_t>(kl)];
                Index left = 1, right = 1;
                for (int s = 0; s < kl; ++s) left *= ws.resp_meta.ranks[static_cast<size_t>(s)];
                for (int s = kl + 1; s < d - d0; ++s) right *= ws.resp_meta.ranks[static_cast<size_t>(s)];

                const double* rk_src;
                if (huber) {
                    rk_src = ws.resp_buf.skip[static_cast<size_t>(kl)].data();
                } else {
                    Eigen::Map<const Matrix> bkm(ws.bk[static_cast<size_t>(k)].data(), pc,
                                                 ws.bk[static_cast<size_t>(k)].size() / pc);
                    ws.predk.resize(ws.bk[static_cast<size_t>(k)].size() / pc);
                    ws.predk.noalias() = bkm.transpose() * xbar_v;
                    ws.predk -= ws.resp_buf.skip[static_cast<size_t>(kl)];
                    rk_src = ws.predk.data();
                }
                Matrix& ur = ws.unf_skip[static_cast<size_t>(k)];
                Matrix& uv = ws.unf_small[static_cast<size_t>(k)];
                unfold_mode_into(rk_src, left, pk, right, ur);
                unfold_mode_into(ws.vresp.data(), left, rk, right, uv);
                Eigen::Map<Matrix> blk(ws.summand.data() + ws.layout.factor_offsets[static_cast<size_t>(k)], pk, rk);
                blk.noalias() = ur * uv.transpose();
            }
        }

        if (!huber && std::isfinite(tau)) {
            clamp_block(ws.summand.data(), ws.summand.size(), tau);
#ifndef NDEBUG
            assert_bounded(ws.summand.data(), ws.summand.size(), tau);
#endif
        }
        ws.acc.add(ws.summand);
    }

    Vector flat = ws.acc.total(ws.layout.total) / static_cast<double>(n);
    return assemble(flat, f, ws.layout);
}

}  // namespace

GradientSet linear_gradients(const TuckerFactors& f, const RegressionData& data, TruncationLevel tau,
                             GradientScratch* scratch) {
    return linear_family(f, data, tau.tau, false, 0.0, scratch);
}

GradientSet huber_gradients(const TuckerFactors& f, const RegressionData& data, double nu, GradientScratch* scratch) {
    if (!(nu > 0)) throw std::invalid_argument("huber threshold must be positive");
    return linear_family(f, data, std::numeric_limits<double>::infinity(), true, nu, scratch);
}

GradientSet logistic_gradients(const TuckerFactors& f, const LogisticData& data, TruncationLevel tau,
                               GradientScratch* scratch) {
    f.validate();
    if (data.xs.empty() || data.xs.size() != data.ys.size())
        throw std::invalid_argument("logistic data must be nonempty with matching covariates and labels");
    for (int y : data.ys)
        if (y != 0 && y != 1) throw std::invalid_argument("logistic labels must be 0 or 1");
    const int d = f.order();
    check_against_factors(f, data.xs[0].shape(), 0, "covariate");

    std::unique_ptr<GradientScratch> local;
    ScratchImpl& ws = ensure_scratch(scratch, local);
    ws.cov_meta.setup(data.xs[0].shape(), f.factors, 0);
    ws.cov_buf.setup(ws.cov_meta);
    ws.layout.setup(f);
    ws.acc.reset(ws.layout.total);
    ws.summand.resize(ws.layout.total);

    ws.smat.resize(static_cast<size_t>(d));
    ws.unf_skip.resize(static_cast<size_t>(d));
    for (int k = 0; k < d; ++k) {
        ws.smat[static_cast<size_t>(k)] = matricize(f.core, k);
        ws.unf_skip[static_cast<size_t>(k)].resize(ws.cov_meta.dims[static_cast<size_t>(k)],
                                                   f.core.size() / f.core.dim(k));
    }

    const size_t n = data.n();
    for (size_t i = 0; i < n; ++i) {
        const Tensor& x = data.xs[i];
        run_chain(x.data(), ws.cov_meta, f.factors, 0, ws.cov_buf, true);
        const Vector& xbar = ws.cov_buf.chain[static_cast<size_t>(d)];
        const double s = xbar.dot(f.core.flat());
        const double resid = sigmoid(s) - static_cast<double>(data.ys[i]);

        ws.summand.head(ws.layout.core_size) = resid * xbar;
        for (int k = 0; k < d; ++k) {
            const Index rk = f.core.dim(k);
            const Index pk = ws.cov_meta.dims[static_cast<size_t>(k)];
            Index left = 1, right = 1;
            for (int s2 = 0; s2 < k; ++s2) left *= ws.cov_meta.ranks[static_cast<size_t>(s2)];
            for (int s2 = k + 1; s2 < d; ++s2) right *= ws.cov_meta.ranks[static_cast<size_t>(s2)];
            Matrix& ux = ws.unf_skip[static_cast<size_t>(k)];
            unfold_mode_into(ws.cov_buf.skip[static_cast<size_t>(k)].data(), left, pk, right, ux);
            Eigen::Map<Matrix> blk(ws.summand.data() + ws.layout.factor_offsets[static_cast<size_t>(k)], pk, rk);
            blk.noalias() = ux * ws.smat[static_cast<size_t>(k)].transpose();
            blk *= resid;
        }
        if (tau.is_finite()) {
            clamp_block(ws.summand.data(), ws.summand.size(), tau.tau);
#ifndef NDEBUG
            assert_bounded(ws.summand.data(), ws.summand.size(), tau.tau);
#endif
        }
        ws.acc.add(ws.summand);
    }
    Vector flat = ws.acc.total(ws.layout.total) / static_cast<double>(n);
    return assemble(flat, f, ws.layout);
}

namespace {

GradientSet pca_family(const TuckerFactors& f, const PcaData& data, double tau, bool huber, double nu,
                       GradientScratch* scratch) {
    f.validate();
    if (data.ys.empty()) throw std::invalid_argument("pca data must be nonempty");
    check_against_factors(f, data.ys[0].shape(), 0, "observation");
    const int d = f.order();

    std::unique_ptr<GradientScratch> local;
    ScratchImpl& ws = ensure_scratch(scratch, local);
    ws.cov_meta.setup(data.ys[0].shape(), f.factors, 0);
    ws.cov_buf.setup(ws.cov_meta);
    ws.layout.setup(f);
    ws.acc.reset(ws.layout.total);
    ws.summand.resize(ws.layout.total);

    ws.smat.resize(static_cast<size_t>(d));
    ws.unf_skip.resize(static_cast<size_t>(d));
    for (int k = 0; k < d; ++k) {
        ws.smat[static_cast<size_t>(k)] = matricize(f.core, k);
        ws.unf_skip[static_cast<size_t>(k)].resize(ws.cov_meta.dims[static_cast<size_t>(k)],
                                                   f.core.size() / f.core.dim(k));
    }

    Tensor a_full;
    if (huber) {
        a_full = reconstruct(f);
        ws.wfull.resize(a_full.size());
    } else {
        // observation-independent parts of the gradient
        Tensor t0 = f.core;
        for (int j = 0; j < d; ++j) {
            const Matrix& u = f.factors[static_cast<size_t>(j)];
            t0 = mode_product(t0, Matrix(u.transpose() * u), j);
        }
        ws.d0_tensor = t0;
        ws.dk.resize(static_cast<size_t>(d));
        for (int k = 0; k < d; ++k) {
            Tensor t = mode_product(f.core, f.factors[static_cast<size_t>(k)], k);
            for (int j = 0; j < d; ++j) {
                if (j == k) continue;
                const Matrix& u = f.factors[static_cast<size_t>(j)];
                t = mode_product(t, Matrix(u.transpose() * u), j);
            }
            ws.dk[static_cast<size_t>(k)] = matricize(t, k) * ws.smat[static_cast<size_t>(k)].transpose();
        }
    }

    const size_t n = data.n();
    for (size_t i = 0; i < n; ++i) {
        const double* obs;
        if (huber) {
            ws.wfull = a_full.flat() - data.ys[i].flat();
            clamp_block(ws.wfull.data(), ws.wfull.size(), nu);
            obs = ws.wfull.data();
        } else {
            obs = data.ys[i].data();
        }
        run_chain(obs, ws.cov_meta, f.factors, 0, ws.cov_buf, true);

        if (huber) {
            ws.summand.head(ws.layout.core_size) = ws.cov_buf.chain[static_cast<size_t>(d)];
        } else {
            ws.summand.head(ws.layout.core_size) =
                ws.d0_tensor.flat() - ws.cov_buf.chain[static_cast<size_t>(d)];
        }
        for (int k = 0; k < d; ++k) {
            const Index rk = f.core.dim(k);
            const Index pk = ws.cov_meta.dims[static_cast<size_t>(k)];
            Index left = 1, right = 1;
            for (int s = 0; s < k; ++s) left *= ws.cov_meta.ranks[static_cast<size_t>(s)];
            for (int s = k + 1; s < d; ++s) right *= ws.cov_meta.ranks[static_cast<size_t>(s)];
            Matrix& uy = ws.unf_skip[static_cast<size_t>(k)];
            unfold_mode_into(ws.cov_buf.skip[static_cast<size_t>(k)].data(), left, pk, right, uy);
            Eigen::Map<Matrix> blk(ws.summand.data() + ws.layout.factor_offsets[static_cast<size_t>(k)], pk, rk);
            if (huber) {
                blk.noalias() = uy * ws.smat[static_cast<size_t>(k)].transpose();
            } else {
                blk.noalias() = -(uy * ws.smat[static_cast<size_t>(k)].transpose());
                blk += ws.dk[static_cast<size_t>(k)];
            }
        }
        if (!huber && std::isfinite(tau)) {
            clamp_block(ws.summand.data(), ws.summand.size(), tau);
#ifndef NDEBUG
            assert_bounded(ws.summand.data(), ws.summand.size(), tau);
#endif
        }
        ws.acc.add(ws.summand);
    }
    Vector flat = ws.acc.total(ws.layout.total) / static_cast<double>(n);
    return assemble(flat, f, ws.layout);
}

}  // namespace

GradientSet pca_gradients(const TuckerFactors& f, const PcaData& data, TruncationLevel tau, GradientScratch* scratch) {
    return pca_family(f, data, tau.tau, false, 0.0, scratch);
}

GradientSet pca_huber_gradients(const TuckerFactors& f, const PcaData& data, double nu, GradientScratch* scratch) {
    if (!(nu > 0)) throw std::invalid_argument("huber threshold must be positive");
    return pca_family(f, data, std::numeric_limits<double>::infinity(), true, nu, scratch);
}

}  // namespace trgd
