#include "gestnet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gestnet/rng.hpp"

#ifdef GESTNET_USE_EIGEN
#include <Eigen/Dense>
#endif

namespace gestnet {

// --- gemm ---------------------------------------------------------------------

#ifdef GESTNET_USE_EIGEN
namespace {
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;
} // namespace

void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
          std::size_t n, bool trans_a, bool trans_b, double beta) {
    if (m == 0 || n == 0) return;
    MutMap cm(c, static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    if (beta == 0.0)
        cm.setZero();
    else if (beta != 1.0)
        cm *= beta;
    if (k == 0) return;
    auto mi = static_cast<Eigen::Index>(m);
    auto ki = static_cast<Eigen::Index>(k);
    auto ni = static_cast<Eigen::Index>(n);
    if (!trans_a && !trans_b)
        cm.noalias() += ConstMap(a, mi, ki) * ConstMap(b, ki, ni);
    else if (!trans_a && trans_b)
        cm.noalias() += ConstMap(a, mi, ki) * ConstMap(b, ni, ki).transpose();
    else if (trans_a && !trans_b)
        cm.noalias() += ConstMap(a, ki, mi).transpose() * ConstMap(b, ki, ni);
    else
        cm.noalias() += ConstMap(a, ki, mi).transpose() * ConstMap(b, ni, ki).transpose();
}
#else
void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
          std::size_t n, bool trans_a, bool trans_b, double beta) {
    if (m == 0 || n == 0) return;
    if (beta == 0.0)
        std::fill(c, c + m * n, 0.0);
    else if (beta != 1.0)
        for (std::size_t i = 0; i < m * n; ++i) c[i] *= beta;
    auto at = [&](std::size_t i, std::size_t p) { return trans_a ? a[p * m + i] : a[i * k + p]; };
    auto bt = [&](std::size_t p, std::size_t j) { return trans_b ? b[j * k + p] : b[p * n + j]; };
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            double av = at(i, p);
            if (av == 0.0) continue;
            double* crow = c + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * bt(p, j);
        }
}
#endif

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// fixed chunking for parallel reductions into shared buffers; the chunk count
// is independent of the thread count so the reduction order is pinned
constexpr std::size_t kReduceChunks = 8;

} // namespace

// --- elementwise ----------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    require(same_shape(a.shape(), b.shape()), "add: shape mismatch");
    std::vector<double> out(a.size());
    const double* pa = a.data();
    const double* pb = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = pa[i] + pb[i];
    auto an = a.node();
    auto bn = b.node();
    return make_op(a.shape(), std::move(out), {a, b}, [an, bn](Node& self) {
        const auto& dy = self.grad;
        if (an->requires_grad) {
            auto& da = an->ensure_grad();
            for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i];
        }
        if (bn->requires_grad) {
            auto& db = bn->ensure_grad();
            for (std::size_t i = 0; i < dy.size(); ++i) db[i] += dy[i];
        }
    });
}

Tensor add_n(const std::vector<Tensor>& terms) {
    require(!terms.empty(), "add_n: no terms");
    for (const auto& t : terms)
        require(same_shape(t.shape(), terms[0].shape()), "add_n: shape mismatch");
    std::vector<double> out(terms[0].size(), 0.0);
    for (const auto& t : terms) {
        const double* p = t.data();
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += p[i];
    }
    std::vector<std::shared_ptr<Node>> nodes;
    nodes.reserve(terms.size());
    for (const auto& t : terms) nodes.push_back(t.node());
    return make_op(terms[0].shape(), std::move(out), terms, [nodes](Node& self) {
        for (const auto& n : nodes) {
            if (!n->requires_grad) continue;
            auto& d = n->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) d[i] += self.grad[i];
        }
    });
}

Tensor scale(const Tensor& a, double c) {
    std::vector<double> out(a.size());
    const double* pa = a.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = pa[i] * c;
    auto an = a.node();
    return make_op(a.shape(), std::move(out), {a}, [an, c](Node& self) {
        auto& da = an->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) da[i] += self.grad[i] * c;
    });
}

Tensor relu(const Tensor& x) {
    std::vector<double> out(x.size());
    const double* px = x.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = px[i] > 0.0 ? px[i] : 0.0;
    auto xn = x.node();
    return make_op(x.shape(), std::move(out), {x}, [xn](Node& self) {
        auto& dx = xn->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i)
            if (self.value[i] > 0.0) dx[i] += self.grad[i];
    });
}

Tensor weighted_sum(const Tensor& x, const std::vector<double>& coeffs) {
    require(coeffs.size() == x.size(), "weighted_sum: coefficient count mismatch");
    double s = 0.0;
    const double* px = x.data();
    for (std::size_t i = 0; i < coeffs.size(); ++i) s += coeffs[i] * px[i];
    auto xn = x.node();
    auto cs = std::make_shared<std::vector<double>>(coeffs);
    return make_op(Shape{}, {s}, {x}, [xn, cs](Node& self) {
        auto& dx = xn->ensure_grad();
        double g = self.grad[0];
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g * (*cs)[i];
    });
}

Tensor sum_all(const Tensor& x) {
    double s = 0.0;
    const double* px = x.data();
    for (std::size_t i = 0; i < x.size(); ++i) s += px[i];
    auto xn = x.node();
    return make_op(Shape{}, {s}, {x}, [xn](Node& self) {
        auto& dx = xn->ensure_grad();
        double g = self.grad[0];
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g;
    });
}

// --- matmul / linear --------------------------------------------------------------

Tensor reshape(const Tensor& x, Shape shape) {
    require(numel(shape) == x.size(), "reshape: element count mismatch");
    auto xn = x.node();
    return make_op(std::move(shape), x.values(), {x}, [xn](Node& self) {
        auto& dx = xn->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) dx[i] += self.grad[i];
    });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require(a.rank() == 2 && b.rank() == 2, "matmul: rank-2 operands required");
    require(a.shape()[1] == b.shape()[0], "matmul: inner extents differ");
    std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    std::vector<double> out(m * n);
    gemm(a.data(), b.data(), out.data(), m, k, n);
    auto an = a.node();
    auto bn = b.node();
    return make_op({m, n}, std::move(out), {a, b}, [an, bn, m, k, n](Node& self) {
        const double* dy = self.grad.data();
        if (an->requires_grad)
            gemm(dy, bn->value.data(), an->ensure_grad().data(), m, n, k, false, true, 1.0);
        if (bn->requires_grad)
            gemm(an->value.data(), dy, bn->ensure_grad().data(), k, m, n, true, false, 1.0);
    });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    require(x.rank() >= 1 && w.rank() == 2, "linear: bad ranks");
    std::size_t din = w.shape()[0], dout = w.shape()[1];
    require(x.shape().back() == din, "linear: input width mismatch");
    require(b.rank() == 1 && b.shape()[0] == dout, "linear: bias width mismatch");
    std::size_t rows = x.size() / din;
    std::vector<double> out(rows * dout);
    gemm(x.data(), w.data(), out.data(), rows, din, dout);
    const double* pb = b.data();
    for (std::size_t r = 0; r < rows; ++r) {
        double* prow = out.data() + r * dout;
        for (std::size_t j = 0; j < dout; ++j) prow[j] += pb[j];
    }
    Shape oshape = x.shape();
    oshape.back() = dout;
    auto xn = x.node();
    auto wn = w.node();
    auto bn = b.node();
    return make_op(std::move(oshape), std::move(out), {x, w, b},
                   [xn, wn, bn, rows, din, dout](Node& self) {
                       const double* dy = self.grad.data();
                       if (xn->requires_grad)
                           gemm(dy, wn->value.data(), xn->ensure_grad().data(), rows, dout, din,
                                false, true, 1.0);
                       if (wn->requires_grad)
                           gemm(xn->value.data(), dy, wn->ensure_grad().data(), din, rows, dout,
                                true, false, 1.0);
                       if (bn->requires_grad) {
                           auto& db = bn->ensure_grad();
                           for (std::size_t r = 0; r < rows; ++r)
                               for (std::size_t j = 0; j < dout; ++j) db[j] += dy[r * dout + j];
                       }
                   });
}

// --- softmax / cross entropy -------------------------------------------------------

Tensor softmax_last(const Tensor& x) {
    require(x.rank() >= 1, "softmax: rank >= 1 required");
    check_finite(x.values(), "softmax input");
    std::size_t width = x.shape().back();
    std::size_t rows = x.size() / width;
    std::vector<double> out(x.size());
    const double* px = x.data();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = px + r * width;
        double* o = out.data() + r * width;
        double mx = in[0];
        for (std::size_t j = 1; j < width; ++j) mx = std::max(mx, in[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < width; ++j) {
            o[j] = std::exp(in[j] - mx);
            sum += o[j];
        }
        double inv = 1.0 / sum;
        for (std::size_t j = 0; j < width; ++j) o[j] *= inv;
    }
    auto xn = x.node();
    return make_op(x.shape(), std::move(out), {x}, [xn, rows, width](Node& self) {
        auto& dx = xn->ensure_grad();
        for (std::size_t r = 0; r < rows; ++r) {
            const double* y = self.value.data() + r * width;
            const double* dy = self.grad.data() + r * width;
            double dot = 0.0;
            for (std::size_t j = 0; j < width; ++j) dot += dy[j] * y[j];
            double* d = dx.data() + r * width;
            for (std::size_t j = 0; j < width; ++j) d[j] += (dy[j] - dot) * y[j];
        }
    });
}

Tensor softmax_rows(const Tensor& x) {
    require(x.rank() == 2, "softmax_rows: rank-2 input required");
    return softmax_last(x);
}

Tensor cross_entropy(const Tensor& logits, const std::vector<std::size_t>& labels) {
    require(logits.rank() == 2, "cross_entropy: rank-2 logits required");
    std::size_t batch = logits.shape()[0], classes = logits.shape()[1];
    require(labels.size() == batch, "cross_entropy: label count mismatch");
    check_finite(logits.values(), "cross_entropy logits");
    const double* px = logits.data();
    double total = 0.0;
    for (std::size_t r = 0; r < batch; ++r) {
        require(labels[r] < classes, "cross_entropy: label out of range");
        const double* in = px + r * classes;
        double mx = in[0];
        for (std::size_t j = 1; j < classes; ++j) mx = std::max(mx, in[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < classes; ++j) sum += std::exp(in[j] - mx);
        total += std::log(sum) + mx - in[labels[r]];
    }
    auto xn = logits.node();
    auto lab = std::make_shared<std::vector<std::size_t>>(labels);
    return make_op(Shape{}, {total / static_cast<double>(batch)}, {logits},
                   [xn, lab, batch, classes](Node& self) {
                       double g = self.grad[0] / static_cast<double>(batch);
                       auto& dx = xn->ensure_grad();
                       const double* px = xn->value.data();
                       for (std::size_t r = 0; r < batch; ++r) {
                           const double* in = px + r * classes;
                           double mx = in[0];
                           for (std::size_t j = 1; j < classes; ++j) mx = std::max(mx, in[j]);
                           double sum = 0.0;
                           for (std::size_t j = 0; j < classes; ++j) sum += std::exp(in[j] - mx);
                           double inv = 1.0 / sum;
                           double* d = dx.data() + r * classes;
                           for (std::size_t j = 0; j < classes; ++j) {
                               double p = std::exp(in[j] - mx) * inv;
                               d[j] += g * (p - (j == (*lab)[r] ? 1.0 : 0.0));
                           }
                       }
                   });
}

// --- graph-feature ops ---------------------------------------------------------

Tensor channel_map(const Tensor& x, const Tensor& w) {
    require(x.rank() == 4, "channel_map: [B,C,T,J] input required");
    require(w.rank() == 2, "channel_map: [C_out,C_in] weights required");
    std::size_t b = x.shape()[0], c = x.shape()[1], t = x.shape()[2], j = x.shape()[3];
    require(w.shape()[1] == c, "channel_map: channel extent mismatch");
    std::size_t co = w.shape()[0];
    std::size_t pos = t * j;
    std::vector<double> out(b * co * pos);
#pragma omp parallel for schedule(static)
    for (long long bi = 0; bi < static_cast<long long>(b); ++bi) {
        gemm(w.data(), x.data() + bi * c * pos, out.data() + bi * co * pos, co, c, pos);
    }
    auto xn = x.node();
    auto wn = w.node();
    return make_op({b, co, t, j}, std::move(out), {x, w}, [xn, wn, b, c, co, pos](Node& self) {
        const double* dy = self.grad.data();
        if (xn->requires_grad) {
            double* dx = xn->ensure_grad().data();
#pragma omp parallel for schedule(static)
            for (long long bi = 0; bi < static_cast<long long>(b); ++bi)
                gemm(wn->value.data(), dy + bi * co * pos, dx + bi * c * pos, c, co, pos, true,
                     false, 1.0);
        }
        if (wn->requires_grad) {
            std::size_t chunks = std::min<std::size_t>(kReduceChunks, b);
            std::vector<std::vector<double>> partial(chunks, std::vector<double>(co * c, 0.0));
#pragma omp parallel for schedule(static)
            for (long long ci = 0; ci < static_cast<long long>(chunks); ++ci) {
                std::size_t lo = b * ci / chunks, hi = b * (ci + 1) / chunks;
                for (std::size_t bi = lo; bi < hi; ++bi)
                    gemm(dy + bi * co * pos, xn->value.data() + bi * c * pos,
                         partial[ci].data(), co, pos, c, false, true, 1.0);
            }
            auto& dw = wn->ensure_grad();
            for (std::size_t ci = 0; ci < chunks; ++ci)
                for (std::size_t i = 0; i < dw.size(); ++i) dw[i] += partial[ci][i];
        }
    });
}

Tensor joint_mix(const Tensor& x, const Tensor& m) {
    require(x.rank() == 4, "joint_mix: [B,C,T,J] input required");
    std::size_t b = x.shape()[0], c = x.shape()[1], t = x.shape()[2], j = x.shape()[3];
    bool per_sample = m.rank() == 3;
    if (per_sample)
        require(m.shape()[0] == b && m.shape()[1] == j && m.shape()[2] == j,
                "joint_mix: mix matrix must be [B,J,J]");
    else
        require(m.rank() == 2 && m.shape()[0] == j && m.shape()[1] == j,
                "joint_mix: mix matrix must be [J,J]");
    std::size_t rows = c * t;
    std::vector<double> out(x.size());
#pragma omp parallel for schedule(static)
    for (long long bi = 0; bi < static_cast<long long>(b); ++bi) {
        const double* mb = m.data() + (per_sample ? bi * j * j : 0);
        // y[., i] = sum_j x[., j] M[i, j]
        gemm(x.data() + bi * rows * j, mb, out.data() + bi * rows * j, rows, j, j, false, true);
    }
    auto xn = x.node();
    auto mn = m.node();
    return make_op(x.shape(), std::move(out), {x, m},
                   [xn, mn, b, rows, j, per_sample](Node& self) {
                       const double* dy = self.grad.data();
                       if (xn->requires_grad) {
                           double* dx = xn->ensure_grad().data();
#pragma omp parallel for schedule(static)
                           for (long long bi = 0; bi < static_cast<long long>(b); ++bi) {
                               const double* mb = mn->value.data() + (per_sample ? bi * j * j : 0);
                               gemm(dy + bi * rows * j, mb, dx + bi * rows * j, rows, j, j, false,
                                    false, 1.0);
                           }
                       }
                       if (mn->requires_grad) {
                           double* dm = mn->ensure_grad().data();
                           if (per_sample) {
#pragma omp parallel for schedule(static)
                               for (long long bi = 0; bi < static_cast<long long>(b); ++bi)
                                   gemm(dy + bi * rows * j, xn->value.data() + bi * rows * j,
                                        dm + bi * j * j, j, rows, j, true, false, 1.0);
                           } else {
                               for (std::size_t bi = 0; bi < b; ++bi)
                                   gemm(dy + bi * rows * j, xn->value.data() + bi * rows * j, dm,
                                        j, rows, j, true, false, 1.0);
                           }
                       }
                   });
}

Tensor gram_joints(const Tensor& x) {
    require(x.rank() == 4, "gram_joints: [B,C,T,J] input required");
    std::size_t b = x.shape()[0], c = x.shape()[1], t = x.shape()[2], j = x.shape()[3];
    std::size_t rows = c * t;
    std::vector<double> out(b * j * j);
#pragma omp parallel for schedule(static)
    for (long long bi = 0; bi < static_cast<long long>(b); ++bi) {
        const double* xb = x.data() + bi * rows * j;
        gemm(xb, xb, out.data() + bi * j * j, j, rows, j, true, false);
    }
    auto xn = x.node();
    return make_op({b, j, j}, std::move(out), {x}, [xn, b, rows, j](Node& self) {
        if (!xn->requires_grad) return;
        double* dx = xn->ensure_grad().data();
        const double* dy = self.grad.data();
#pragma omp parallel for schedule(static)
        for (long long bi = 0; bi < static_cast<long long>(b); ++bi) {
            const double* ds = dy + bi * j * j;
            std::vector<double> sym(j * j);
            for (std::size_t r = 0; r < j; ++r)
                for (std::size_t q = 0; q < j; ++q) sym[r * j + q] = ds[r * j + q] + ds[q * j + r];
            gemm(xn->value.data() + bi * rows * j, sym.data(), dx + bi * rows * j, rows, j, j,
                 false, false, 1.0);
        }
    });
}

// --- temporal convolution ---------------------------------------------------------

namespace {

void im2col_time(const double* x, std::size_t c, std::size_t t, std::size_t j, std::size_t kt,
                 std::size_t stride, std::size_t pad, std::size_t tout, double* col) {
    for (std::size_t ci = 0; ci < c; ++ci)
        for (std::size_t dt = 0; dt < kt; ++dt) {
            double* row = col + (ci * kt + dt) * tout * j;
            for (std::size_t to = 0; to < tout; ++to) {
                long long tin = static_cast<long long>(to * stride + dt) - static_cast<long long>(pad);
                if (tin < 0 || tin >= static_cast<long long>(t)) {
                    std::fill(row + to * j, row + (to + 1) * j, 0.0);
                } else {
                    const double* src = x + (ci * t + tin) * j;
                    std::copy(src, src + j, row + to * j);
                }
            }
        }
}

void col2im_time_add(const double* col, std::size_t c, std::size_t t, std::size_t j,
                     std::size_t kt, std::size_t stride, std::size_t pad, std::size_t tout,
                     double* dx) {
    for (std::size_t ci = 0; ci < c; ++ci)
        for (std::size_t dt = 0; dt < kt; ++dt) {
            const double* row = col + (ci * kt + dt) * tout * j;
            for (std::size_t to = 0; to < tout; ++to) {
                long long tin = static_cast<long long>(to * stride + dt) - static_cast<long long>(pad);
                if (tin < 0 || tin >= static_cast<long long>(t)) continue;
                double* dst = dx + (ci * t + tin) * j;
                const double* src = row + to * j;
                for (std::size_t ji = 0; ji < j; ++ji) dst[ji] += src[ji];
            }
        }
}

} // namespace

Tensor temporal_conv(const Tensor& x, const Tensor& kernel, std::size_t stride_t) {
    require(x.rank() == 4, "temporal_conv: [B,C,T,J] input required");
    require(kernel.rank() == 3, "temporal_conv: [C_out,C_in,kt] kernel required");
    require(stride_t >= 1, "temporal_conv: stride must be positive");
    std::size_t b = x.shape()[0], c = x.shape()[1], t = x.shape()[2], j = x.shape()[3];
    require(b * c * t * j > 0, "temporal_conv: zero-extent input");
    require(kernel.shape()[1] == c, "temporal_conv: channel extent mismatch");
    std::size_t co = kernel.shape()[0], kt = kernel.shape()[2];
    require(kt % 2 == 1, "temporal_conv: kernel time extent must be odd");
    std::size_t pad = kt / 2;
    std::size_t tout = (t + 2 * pad - kt) / stride_t + 1;
    std::size_t colsz = c * kt * tout * j;
    std::vector<double> out(b * co * tout * j);
#pragma omp parallel for schedule(static)
    for (long long bi = 0; bi < static_cast<long long>(b); ++bi) {
        std::vector<double> col(colsz);
        im2col_time(x.data() + bi * c * t * j, c, t, j, kt, stride_t, pad, tout, col.data());
        gemm(kernel.data(), col.data(), out.data() + bi * co * tout * j, co, c * kt, tout * j);
    }
    auto xn = x.node();
    auto kn = kernel.node();
    return make_op({b, co, tout, j}, std::move(out), {x, kernel},
                   [xn, kn, b, c, t, j, co, kt, stride_t, pad, tout, colsz](Node& self) {
                       const double* dy = self.grad.data();
                       if (kn->requires_grad) {
                           std::size_t chunks = std::min<std::size_t>(kReduceChunks, b);
                           std::vector<std::vector<double>> partial(
                               chunks, std::vector<double>(co * c * kt, 0.0));
#pragma omp parallel for schedule(static)
                           for (long long ci = 0; ci < static_cast<long long>(chunks); ++ci) {
                               std::vector<double> col(colsz);
                               std::size_t lo = b * ci / chunks, hi = b * (ci + 1) / chunks;
                               for (std::size_t bi = lo; bi < hi; ++bi) {
                                   im2col_time(xn->value.data() + bi * c * t * j, c, t, j, kt,
                                               stride_t, pad, tout, col.data());
                                   gemm(dy + bi * co * tout * j, col.data(), partial[ci].data(),
                                        co, tout * j, c * kt, false, true, 1.0);
                               }
                           }
                           auto& dk = kn->ensure_grad();
                           for (std::size_t ci = 0; ci < chunks; ++ci)
                               for (std::size_t i = 0; i < dk.size(); ++i) dk[i] += partial[ci][i];
                       }
                       if (xn->requires_grad) {
                           double* dx = xn->ensure_grad().data();
#pragma omp parallel for schedule(static)
                           for (long long bi = 0; bi < static_cast<long long>(b); ++bi) {
                               std::vector<double> dcol(colsz);
                               gemm(kn->value.data(), dy + bi * co * tout * j, dcol.data(), c * kt,
                                    co, tout * j, true, false);
                               col2im_time_add(dcol.data(), c, t, j, kt, stride_t, pad, tout,
                                               dx + bi * c * t * j);
                           }
                       }
                   });
}

Tensor mean_pool_tj(const Tensor& x) {
    require(x.rank() == 4, "mean_pool_tj: [B,C,T,J] input required");
    std::size_t b = x.shape()[0], c = x.shape()[1], n = x.shape()[2] * x.shape()[3];
    std::vector<double> out(b * c);
    const double* px = x.data();
    for (std::size_t i = 0; i < b * c; ++i) {
        double s = 0.0;
        const double* block = px + i * n;
        for (std::size_t q = 0; q < n; ++q) s += block[q];
        out[i] = s / static_cast<double>(n);
    }
    auto xn = x.node();
    return make_op({b, c}, std::move(out), {x}, [xn, b, c, n](Node& self) {
        auto& dx = xn->ensure_grad();
        double invn = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < b * c; ++i) {
            double g = self.grad[i] * invn;
            double* block = dx.data() + i * n;
            for (std::size_t q = 0; q < n; ++q) block[q] += g;
        }
    });
}

// --- sequence ops -----------------------------------------------------------------

Tensor reverse_time(const Tensor& x) {
    require(x.rank() == 3, "reverse_time: [B,T,F] input required");
    std::size_t b = x.shape()[0], t = x.shape()[1], f = x.shape()[2];
    std::vector<double> out(x.size());
    const double* px = x.data();
    for (std::size_t bi = 0; bi < b; ++bi)
        for (std::size_t ti = 0; ti < t; ++ti)
            std::copy(px + (bi * t + ti) * f, px + (bi * t + ti + 1) * f,
                      out.data() + (bi * t + (t - 1 - ti)) * f);
    auto xn = x.node();
    return make_op(x.shape(), std::move(out), {x}, [xn, b, t, f](Node& self) {
        auto& dx = xn->ensure_grad();
        const double* dy = self.grad.data();
        for (std::size_t bi = 0; bi < b; ++bi)
            for (std::size_t ti = 0; ti < t; ++ti) {
                const double* src = dy + (bi * t + (t - 1 - ti)) * f;
                double* dst = dx.data() + (bi * t + ti) * f;
                for (std::size_t q = 0; q < f; ++q) dst[q] += src[q];
            }
    });
}

Tensor concat_last(const Tensor& a, const Tensor& b) {
    require(a.rank() == 3 && b.rank() == 3, "concat_last: [B,T,F] inputs required");
    require(a.shape()[0] == b.shape()[0] && a.shape()[1] == b.shape()[1],
            "concat_last: leading extents differ");
    std::size_t batch = a.shape()[0], t = a.shape()[1], fa = a.shape()[2], fb = b.shape()[2];
    std::size_t rows = batch * t;
    std::vector<double> out(rows * (fa + fb));
    for (std::size_t r = 0; r < rows; ++r) {
        std::copy(a.data() + r * fa, a.data() + (r + 1) * fa, out.data() + r * (fa + fb));
        std::copy(b.data() + r * fb, b.data() + (r + 1) * fb, out.data() + r * (fa + fb) + fa);
    }
    auto an = a.node();
    auto bn = b.node();
    return make_op({batch, t, fa + fb}, std::move(out), {a, b}, [an, bn, rows, fa, fb](Node& self) {
        const double* dy = self.grad.data();
        if (an->requires_grad) {
            auto& da = an->ensure_grad();
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t q = 0; q < fa; ++q) da[r * fa + q] += dy[r * (fa + fb) + q];
        }
        if (bn->requires_grad) {
            auto& db = bn->ensure_grad();
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t q = 0; q < fb; ++q) db[r * fb + q] += dy[r * (fa + fb) + fa + q];
        }
    });
}

Tensor select_last_time(const Tensor& x) {
    require(x.rank() == 3, "select_last_time: [B,T,F] input required");
    std::size_t b = x.shape()[0], t = x.shape()[1], f = x.shape()[2];
    std::vector<double> out(b * f);
    for (std::size_t bi = 0; bi < b; ++bi)
        std::copy(x.data() + (bi * t + t - 1) * f, x.data() + (bi * t + t) * f,
                  out.data() + bi * f);
    auto xn = x.node();
    return make_op({b, f}, std::move(out), {x}, [xn, b, t, f](Node& self) {
        auto& dx = xn->ensure_grad();
        for (std::size_t bi = 0; bi < b; ++bi)
            for (std::size_t q = 0; q < f; ++q)
                dx[(bi * t + t - 1) * f + q] += self.grad[bi * f + q];
    });
}

Tensor indrnn_scan(const Tensor& z, const Tensor& u, const Tensor& h0) {
    require(z.rank() == 3, "indrnn_scan: [B,T,N] preactivations required");
    std::size_t b = z.shape()[0], t = z.shape()[1], n = z.shape()[2];
    require(u.rank() == 1 && u.shape()[0] == n, "indrnn_scan: recurrent weight width mismatch");
    require(h0.rank() == 1 && h0.shape()[0] == n, "indrnn_scan: initial state width mismatch");
    std::vector<double> out(z.size());
    const double* pz = z.data();
    const double* pu = u.data();
    const double* ph0 = h0.data();
    for (std::size_t bi = 0; bi < b; ++bi) {
        const double* prev = ph0;
        for (std::size_t ti = 0; ti < t; ++ti) {
            double* h = out.data() + (bi * t + ti) * n;
            const double* zin = pz + (bi * t + ti) * n;
            for (std::size_t q = 0; q < n; ++q) {
                double pre = zin[q] + pu[q] * prev[q];
                h[q] = pre > 0.0 ? pre : 0.0;
            }
            prev = h;
        }
    }
    auto zn = z.node();
    auto un = u.node();
    auto hn = h0.node();
    return make_op(z.shape(), std::move(out), {z, u, h0}, [zn, un, hn, b, t, n](Node& self) {
        const double* h = self.value.data();
        const double* dy = self.grad.data();
        const double* pu = un->value.data();
        const double* ph0 = hn->value.data();
        std::vector<double> du(n, 0.0);
        std::vector<double> dh0(n, 0.0);
        double* dz = zn->requires_grad ? zn->ensure_grad().data() : nullptr;
        std::vector<double> carry(n);
        std::vector<double> gz(n);
        for (std::size_t bi = 0; bi < b; ++bi) {
            std::fill(carry.begin(), carry.end(), 0.0);
            for (std::size_t ti = t; ti-- > 0;) {
                std::size_t off = (bi * t + ti) * n;
                const double* prev = ti == 0 ? ph0 : h + off - n;
                for (std::size_t q = 0; q < n; ++q) {
                    double g = dy[off + q] + carry[q];
                    gz[q] = h[off + q] > 0.0 ? g : 0.0;
                    du[q] += gz[q] * prev[q];
                    carry[q] = gz[q] * pu[q];
                }
                if (dz)
                    for (std::size_t q = 0; q < n; ++q) dz[off + q] += gz[q];
            }
            for (std::size_t q = 0; q < n; ++q) dh0[q] += carry[q];
        }
        if (un->requires_grad) {
            auto& g = un->ensure_grad();
            for (std::size_t q = 0; q < n; ++q) g[q] += du[q];
        }
        if (hn->requires_grad) {
            auto& g = hn->ensure_grad();
            for (std::size_t q = 0; q < n; ++q) g[q] += dh0[q];
        }
    });
}

// --- batch normalization -------------------------------------------------------

BatchNormState::BatchNormState(std::size_t channels)
    : scale(Shape{channels}, 1.0, true),
      shift(Shape{channels}, 0.0, true),
      running_mean(channels, 0.0),
      running_var(channels, 1.0) {}

Tensor batch_norm(const Tensor& x, BatchNormState& state, std::size_t channel_axis, Mode mode) {
    require(channel_axis < x.rank(), "batch_norm: bad channel axis");
    std::size_t channels = x.shape()[channel_axis];
    require(channels == state.channels(), "batch_norm: channel extent mismatch");
    std::size_t pre = 1, post = 1;
    for (std::size_t i = 0; i < channel_axis; ++i) pre *= x.shape()[i];
    for (std::size_t i = channel_axis + 1; i < x.rank(); ++i) post *= x.shape()[i];
    std::size_t count = pre * post;
    require(count > 0, "batch_norm: empty input");

    const double* px = x.data();
    const double* pscale = state.scale.data();
    const double* pshift = state.shift.data();
    double eps = state.epsilon;

    auto xhat = std::make_shared<std::vector<double>>(x.size());
    auto inv_std = std::make_shared<std::vector<double>>(channels);
    std::vector<double> out(x.size());

    if (mode == Mode::train) {
#pragma omp parallel for schedule(static)
        for (long long c = 0; c < static_cast<long long>(channels); ++c) {
            double mean = 0.0;
            for (std::size_t p = 0; p < pre; ++p) {
                const double* block = px + (p * channels + c) * post;
                for (std::size_t q = 0; q < post; ++q) mean += block[q];
            }
            mean /= static_cast<double>(count);
            double var = 0.0;
            for (std::size_t p = 0; p < pre; ++p) {
                const double* block = px + (p * channels + c) * post;
                for (std::size_t q = 0; q < post; ++q) {
                    double d = block[q] - mean;
                    var += d * d;
                }
            }
            var /= static_cast<double>(count);
            double istd = 1.0 / std::sqrt(var + eps);
            (*inv_std)[c] = istd;
            for (std::size_t p = 0; p < pre; ++p) {
                std::size_t base = (p * channels + c) * post;
                for (std::size_t q = 0; q < post; ++q) {
                    double xh = (px[base + q] - mean) * istd;
                    (*xhat)[base + q] = xh;
                    out[base + q] = pscale[c] * xh + pshift[c];
                }
            }
            state.running_mean[c] = state.momentum * state.running_mean[c] +
                                    (1.0 - state.momentum) * mean;
            state.running_var[c] = state.momentum * state.running_var[c] +
                                   (1.0 - state.momentum) * var;
        }
    } else {
#pragma omp parallel for schedule(static)
        for (long long c = 0; c < static_cast<long long>(channels); ++c) {
            double mean = state.running_mean[c];
            double istd = 1.0 / std::sqrt(state.running_var[c] + eps);
            (*inv_std)[c] = istd;
            for (std::size_t p = 0; p < pre; ++p) {
                std::size_t base = (p * channels + c) * post;
                for (std::size_t q = 0; q < post; ++q) {
                    double xh = (px[base + q] - mean) * istd;
                    (*xhat)[base + q] = xh;
                    out[base + q] = pscale[c] * xh + pshift[c];
                }
            }
        }
    }

    auto xn = x.node();
    auto sn = state.scale.node();
    auto bn = state.shift.node();
    bool train = mode == Mode::train;
    return make_op(x.shape(), std::move(out), {x, state.scale, state.shift},
                   [xn, sn, bn, xhat, inv_std, pre, channels, post, count, train](Node& self) {
                       const double* dy = self.grad.data();
                       double* dscale = sn->requires_grad ? sn->ensure_grad().data() : nullptr;
                       double* dshift = bn->requires_grad ? bn->ensure_grad().data() : nullptr;
                       double* dx = xn->requires_grad ? xn->ensure_grad().data() : nullptr;
                       const double* pscale = sn->value.data();
#pragma omp parallel for schedule(static)
                       for (long long c = 0; c < static_cast<long long>(channels); ++c) {
                           double sum_dy = 0.0, sum_dy_xh = 0.0;
                           for (std::size_t p = 0; p < pre; ++p) {
                               std::size_t base = (p * channels + c) * post;
                               for (std::size_t q = 0; q < post; ++q) {
                                   sum_dy += dy[base + q];
                                   sum_dy_xh += dy[base + q] * (*xhat)[base + q];
                               }
                           }
                           if (dscale) dscale[c] += sum_dy_xh;
                           if (dshift) dshift[c] += sum_dy;
                           if (!dx) continue;
                           double istd = (*inv_std)[c];
                           double g = pscale[c] * istd;
                           if (train) {
                               double invn = 1.0 / static_cast<double>(count);
                               for (std::size_t p = 0; p < pre; ++p) {
                                   std::size_t base = (p * channels + c) * post;
                                   for (std::size_t q = 0; q < post; ++q)
                                       dx[base + q] += g * (dy[base + q] - invn * sum_dy -
                                                            invn * (*xhat)[base + q] * sum_dy_xh);
                               }
                           } else {
                               for (std::size_t p = 0; p < pre; ++p) {
                                   std::size_t base = (p * channels + c) * post;
                                   for (std::size_t q = 0; q < post; ++q)
                                       dx[base + q] += g * dy[base + q];
                               }
                           }
                       }
                   });
}

// --- dropout --------------------------------------------------------------------

Tensor dropout(const Tensor& x, double rate, Mode mode, std::uint64_t seed) {
    require(rate >= 0.0 && rate < 1.0, "dropout: rate must lie in [0,1)");
    if (mode == Mode::infer || rate == 0.0) return x;
    double keep = 1.0 - rate;
    double inv = 1.0 / keep;
    std::vector<double> out(x.size());
    const double* px = x.data();
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = element_uniform(seed, i) >= rate ? px[i] * inv : 0.0;
    auto xn = x.node();
    return make_op(x.shape(), std::move(out), {x}, [xn, seed, rate, inv](Node& self) {
        auto& dx = xn->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i)
            if (element_uniform(seed, i) >= rate) dx[i] += self.grad[i] * inv;
    });
}

} // namespace gestnet
