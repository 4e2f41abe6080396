// SPDX-License-Identifier: Apache-2.0
#include "eccl/graph.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <memory>
#include <stdexcept>

namespace eccl {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

[[noreturn]] void shape_error(const std::string& op, const std::string& detail) {
    throw std::invalid_argument(op + ": " + detail);
}

struct ConvDims {
    int n, c, h, w, f, k;
    bool batched;
};

// Samples per im2col chunk; keeps the column buffer cache-resident.
constexpr int kConvChunk = 8;

// cols is [C*k*k, count*H*W] for samples [first, first+count); row (c,ky,kx), column (n,y,x).
template <typename T>
void im2col(const T* in, const ConvDims& d, int first, int count, T* cols) {
    const int pad = d.k / 2;
    const int hw = d.h * d.w;
    const std::size_t ncols = static_cast<std::size_t>(count) * hw;
    for (int c = 0; c < d.c; ++c) {
        for (int ky = 0; ky < d.k; ++ky) {
            for (int kx = 0; kx < d.k; ++kx) {
                T* row = cols + (static_cast<std::size_t>((c * d.k + ky) * d.k + kx)) * ncols;
                const int dy = ky - pad, dx = kx - pad;
                const int shift = dy * d.w + dx;
                const int lo = std::max(0, -shift), hi = std::min(hw, hw - shift);
                const int ylo = std::max(0, -dy), yhi = std::min(d.h, d.h - dy);
                const int xlo = std::max(0, -dx), xhi = std::min(d.w, d.w - dx);
                for (int n = 0; n < count; ++n) {
                    const T* plane = in + (static_cast<std::size_t>(first + n) * d.c + c) * hw;
                    T* dst = row + static_cast<std::size_t>(n) * hw;
                    // Copy the flat-shifted plane, then clear what wrapped across rows or edges.
                    for (int p = 0; p < lo; ++p) dst[p] = T(0);
                    for (int p = lo; p < hi; ++p) dst[p] = plane[p + shift];
                    for (int p = std::max(hi, lo); p < hw; ++p) dst[p] = T(0);
                    for (int y = 0; y < ylo; ++y)
                        for (int x = 0; x < d.w; ++x) dst[y * d.w + x] = T(0);
                    for (int y = std::max(yhi, 0); y < d.h; ++y)
                        for (int x = 0; x < d.w; ++x) dst[y * d.w + x] = T(0);
                    if (xlo > 0 || xhi < d.w) {
                        for (int y = 0; y < d.h; ++y) {
                            for (int x = 0; x < std::min(xlo, d.w); ++x) dst[y * d.w + x] = T(0);
                            for (int x = std::max(xhi, 0); x < d.w; ++x) dst[y * d.w + x] = T(0);
                        }
                    }
                }
            }
        }
    }
}

template <typename T>
void col2im_add(const T* cols, const ConvDims& d, int first, int count, T* out) {
    const int pad = d.k / 2;
    const int hw = d.h * d.w;
    const std::size_t ncols = static_cast<std::size_t>(count) * hw;
    for (int c = 0; c < d.c; ++c) {
        for (int ky = 0; ky < d.k; ++ky) {
            for (int kx = 0; kx < d.k; ++kx) {
                const T* row = cols + (static_cast<std::size_t>((c * d.k + ky) * d.k + kx)) * ncols;
                const int dy = ky - pad, dx = kx - pad;
                const int ylo = std::max(0, -dy), yhi = std::min(d.h, d.h - dy);
                const int xlo = std::max(0, -dx), xhi = std::min(d.w, d.w - dx);
                for (int n = 0; n < count; ++n) {
                    T* plane = out + (static_cast<std::size_t>(first + n) * d.c + c) * hw;
                    const T* src = row + static_cast<std::size_t>(n) * hw;
                    for (int y = ylo; y < yhi; ++y) {
                        T* prow = plane + (y + dy) * d.w + dx;
                        const T* srow = src + y * d.w;
                        for (int x = xlo; x < xhi; ++x) prow[x] += srow[x];
                    }
                }
            }
        }
    }
}

template <typename T>
std::vector<T>& scratch(int slot, std::size_t size) {
    thread_local std::vector<T> buffers[3];
    auto& b = buffers[slot];
    if (b.size() < size) b.resize(size);
    return b;
}

}  // namespace

template <typename T>
typename BasicGraph<T>::Node& BasicGraph<T>::node(Var v) {
    if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) throw std::out_of_range("invalid graph variable");
    return nodes_[static_cast<std::size_t>(v.id)];
}

template <typename T>
const typename BasicGraph<T>::Node& BasicGraph<T>::node(Var v) const {
    if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) throw std::out_of_range("invalid graph variable");
    return nodes_[static_cast<std::size_t>(v.id)];
}

template <typename T>
typename BasicGraph<T>::Var BasicGraph<T>::push(BasicTensor<T> value, bool needs_grad) {
    Node n;
    n.owned = std::move(value);
    n.needs_grad = track_ && needs_grad;
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size() - 1)};
}

template <typename T>
bool BasicGraph<T>::any_needs_grad(std::initializer_list<Var> vars) const {
    for (Var v : vars) {
        if (node(v).needs_grad) return true;
    }
    return false;
}

template <typename T>
BasicTensor<T>& BasicGraph<T>::grad_buffer(int id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.empty()) n.grad = BasicTensor<T>(n.val().shape());
    return n.grad;
}

template <typename T>
typename BasicGraph<T>::Var BasicGraph<T>::constant(BasicTensor<T> value) {
    return push(std::move(value), false);
}

template <typename T>
typename BasicGraph<T>::Var BasicGraph<T>::variable(BasicTensor<T> value) {
    return push(std::move(value), true);
}

template <typename T>
typename BasicGraph<T>::Var BasicGraph<T>::parameter(const BasicNetworkParams<T>& params, std::size_t index) {
    Node n;
    n.external = &params.entry(index).value;
    n.needs_grad = track_;
    n.params = &params;
    n.param_index = index;
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size() - 1)};
}

template <typename T>
typename BasicGraph<T>::Var BasicGraph<T>::conv2d(Var input, Var kernel, Var bias) {
    const auto& x = node(input).val();
    const auto& kt = node(kernel).val();
    const auto& bt = node(bias).val();
    if (x.rank() != 3 && x.rank() != 4) shape_error("conv2d", "input must be [C,H,W] or [N,C,H,W], got " + shape_string(x.shape()));
    if (kt.rank() != 4) shape_error("conv2d", "kernel must be [F,C,k,k], got " + shape_string(kt.shape()));
    ConvDims d{};
    d.batched = x.rank() == 4;
    const int off = d.batched ? 1 : 0;
    d.n = d.batched ? x.dim(0) : 1;
    d.c = x.dim(off);
    d.h = x.dim(off + 1);
    d.w = x.dim(off + 2);
    d.f = kt.dim(0);
    d.k = kt.dim(2);
    if (kt.dim(1) != d.c) shape_error("conv2d", "kernel channels " + std::to_string(kt.dim(1)) + " != input channels " + std::to_string(d.c));
    if (kt.dim(3) != d.k || d.k % 2 == 0) shape_error("conv2d", "kernel must be square with odd size, got " + shape_string(kt.shape()));
    if (bt.rank() != 1 || bt.dim(0) != d.f) shape_error("conv2d", "bias must be [" + std::to_string(d.f) + "], got " + shape_string(bt.shape()));

    const int hw = d.h * d.w;
    const int ckk = d.c * d.k * d.k;
    Shape out_shape = d.batched ? Shape{d.n, d.f, d.h, d.w} : Shape{d.f, d.h, d.w};
    BasicTensor<T> out(out_shape);
    {
        const int chunk = std::min(d.n, kConvChunk);
        auto& cols = scratch<T>(0, static_cast<std::size_t>(ckk) * chunk * hw);
        RowMat<T> out2(d.f, chunk * hw);
        ConstMatMap<T> kmat(kt.data().data(), d.f, ckk);
        T* o = out.data().data();
        for (int first = 0; first < d.n; first += chunk) {
            const int count = std::min(chunk, d.n - first);
            const int ncols = count * hw;
            im2col(x.data().data(), d, first, count, cols.data());
            ConstMatMap<T> cmat(cols.data(), ckk, ncols);
            out2.leftCols(ncols).noalias() = kmat * cmat;
            for (int n = 0; n < count; ++n) {
                for (int f = 0; f < d.f; ++f) {
                    const T b = bt[static_cast<std::size_t>(f)];
                    const T* src = out2.data() + static_cast<std::size_t>(f) * out2.cols() + static_cast<std::size_t>(n) * hw;
                    T* dst = o + (static_cast<std::size_t>(first + n) * d.f + f) * hw;
                    for (int i = 0; i < hw; ++i) dst[i] = src[i] + b;
                }
            }
        }
    }

    const bool ng = any_needs_grad({input, kernel, bias});
    Var out_var = push(std::move(out), ng);
    if (!nodes_.back().needs_grad) return out_var;

    nodes_.back().backprop = [this, input, kernel, bias, out_var, d, hw, ckk]() {
        const auto& g = nodes_[out_var.id].grad;
        const auto& xin = nodes_[input.id].val();
        const auto& kt = nodes_[kernel.id].val();
        const bool want_k = nodes_[kernel.id].needs_grad;
        const bool want_b = nodes_[bias.id].needs_grad;
        const bool want_x = nodes_[input.id].needs_grad;
        const int chunk = std::min(d.n, kConvChunk);
        auto& cols = scratch<T>(0, static_cast<std::size_t>(ckk) * chunk * hw);
        auto& g2buf = scratch<T>(1, static_cast<std::size_t>(d.f) * chunk * hw);
        auto& gcols = scratch<T>(2, static_cast<std::size_t>(ckk) * chunk * hw);
        ConstMatMap<T> kmat(kt.data().data(), d.f, ckk);
        for (int first = 0; first < d.n; first += chunk) {
            const int count = std::min(chunk, d.n - first);
            const int ncols = count * hw;
            MatMap<T> g2(g2buf.data(), d.f, ncols);
            for (int n = 0; n < count; ++n) {
                for (int f = 0; f < d.f; ++f) {
                    const T* src = g.data().data() + (static_cast<std::size_t>(first + n) * d.f + f) * hw;
                    std::copy(src, src + hw, g2buf.data() + static_cast<std::size_t>(f) * ncols + static_cast<std::size_t>(n) * hw);
                }
            }
            if (want_k) {
                im2col(xin.data().data(), d, first, count, cols.data());
                ConstMatMap<T> cmat(cols.data(), ckk, ncols);
                MatMap<T> gkm(grad_buffer(kernel.id).data().data(), d.f, ckk);
                gkm.noalias() += g2 * cmat.transpose();
            }
            if (want_b) {
                auto& gb = grad_buffer(bias.id);
                // plain loops: Eigen reductions reorder sums with buffer alignment
                for (int f = 0; f < d.f; ++f) {
                    const T* r = g2buf.data() + static_cast<std::size_t>(f) * ncols;
                    T acc = 0;
                    for (int j = 0; j < ncols; ++j) acc += r[j];
                    gb[static_cast<std::size_t>(f)] += acc;
                }
            }
            if (want_x) {
                MatMap<T> gc(gcols.data(), ckk, ncols);
                gc.noalias() = kmat.transpose() * g2;
                col2im_add(gcols.data(), d, first, count, grad_buffer(input.id).data().data());
            }
        }
    };
    return out_var;
}

template <typename T>
typename BasicGraph<T>::Var BasicGraph<T>::dense(Var input, Var weights, Var bias) {
    const auto& x = node(input).val();
    const auto& wt = node(weights).val();
    const auto& bt = node(bias).val();
    if (x.rank() != 1 && x.rank() != 2) shape_error("dense", "input must be [n] or [N,n], got " + shape_string(x.shape()));
    if (wt.rank() != 2) shape_error("dense", "weights must be [m,n], got " + shape_string(wt.shape()));
    const bool batched = x.rank() == 2;
    const int n_rows = batched ? x.dim(0) : 1;
    const int n_in = batched ? x.dim(1) : x.dim(0);
    const int m = wt.dim(0);
    if (wt.dim(1) != n_in) shape_error("dense", "weights " + shape_string(wt.shape()) + " do not accept input " + shape_string(x.shape()));
    if (bt.rank() != 1 || bt.dim(0) != m) shape_error("dense", "bias must be [" + std::to_string(m) + "], got " + shape_string(bt.shape()));

    BasicTensor<T> out(batched ? Shape{n_rows, m} : Shape{m});
    MatMap<T> om(out.data().data(), n_rows, m);
    ConstMatMap<T> xm(x.data().data(), n_rows, n_in);
    ConstMatMap<T> wm(wt.data().data(), m, n_in);
    om.noalias() = xm * wm.transpose();
    Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> bv(bt.data().data(), m);
    om.rowwise() += bv;

    Var out_var = push(std::move(out), any_needs_grad({input, weights, bias}));
    if (!nodes_.back().needs_grad) return out_var;
    nodes_.back().backprop = [this, input, weights, bias, out_var, n_rows, n_in, m]() {
        const auto& g = nodes_[out_var.id].grad;
        ConstMatMap<T> gm(g.data().data(), n_rows, m);
        if (nodes_[weights.id].needs_grad) {
            const auto& x = nodes_[input.id].val();
            ConstMatMap<T> xm(x.data().data(), n_rows, n_in);
            MatMap<T> gw(grad_buffer(weights.id).data().data(), m, n_in);
            gw.noalias() += gm.transpose() * xm;
        }
        if (nodes_[bias.id].needs_grad) {
            auto& gb = grad_buffer(bias.id);
            const T* gp = g.data().data();
            for (int r = 0; r < n_rows; ++r)
                for (int j = 0; j < m; ++j) gb[static_cast<std::size_t>(j)] += gp[static_cast<std::size_t>(r) * m + j];
        }
        if (nodes_[input.id].needs_grad) {
            const auto& wt = nodes_[weights.id].val();
            ConstMatMap<T> wm(wt.data().data(), m, n_in);
            MatMap<T> gx(grad_buffer(input.id).data().data(), n_rows, n_in);
            gx.noalias() += gm * wm;
        }
    };
    return out_var;
}

template <typename T>
typename BasicGraph<T>::Var BasicGraph<T>::relu(Var x) {
    BasicTensor<T> out = node(x).val();
    for (T& v : out.data()) v = v > T(0) ? v : T(0);
    Var out_var = push(std::move(out), any_needs_grad({x}));
    if (!nodes_.back().needs_grad) return out_var;
    nodes_.back().backprop = [this, x, out_var]() {
        const auto& g = nodes_[out_var.id].grad;
        const auto& y = nodes_[out_var.id].val();
        auto& gx = grad_buffer(x.id);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (y[i] > T(0)) gx[i] += g[i];
        }
    };
    return out_var;
}

template <typename T>
typename BasicGraph<T>::Var BasicGraph<T>::add(Var a, Var b) {
    const auto& av = node(a).val();
    const auto& bv = node(b).val();
    if (av.shape() != bv.shape()) shape_error("add", shape_string(av.shape()) + " vs " + shape_string(bv.shape()));
    BasicTensor<T> out = av;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
    Var out_var = push(std::move(out), any_needs_grad({a, b}));
    if (!nodes_.back().needs_grad) return out_var;
    nodes_.back().backprop = [this, a, b, out_var]() {
        const auto& g = nodes_[out_var.id].grad;
        for (Var v : {a, b}) {
            if (!nodes_[v.id].needs_grad) continue;
            auto& gv = grad_buffer(v.id);
            for (std::size_t i = 0; i < g.size(); ++i) gv[i] += g[i];
        }
    };
    return out_var;
}

template <typename T>
typename BasicGraph<T>::Var BasicGraph<T>::mul(Var a, Var b) {
    const auto& av = node(a).val();
    const auto& bv = node(b).val();
    if (av.shape() != bv.shape()) shape_error("mul", shape_string(av.shape()) + " vs " + shape_string(bv.shape()));
    BasicTensor<T> out = av;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
    Var out_var = push(std::move(out), any_needs_grad({a, b}));
    if (!nodes_.back().needs_grad) return out_var;
    nodes_.back().backprop = [this, a, b, out_var]() {
        const auto& g = nodes_[out_var.id].grad;
        const auto& av = nodes_[a.id].val();
        const auto& bv = nodes_[b.id].val();
        if (nodes_[a.id].needs_grad) {
            auto& ga = grad_buffer(a.id);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
        }
        if (nodes_[b.id].needs_grad) {
            auto& gb = grad_buffer(b.id);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
        }
    };
    return out_var;
}

template <typename T>
typename BasicGraph<T>::Var BasicGraph<T>::scale(Var x, T factor) {
    BasicTensor<T> out = node(x).val();
    for (T& v : out.data()) v *= factor;
    Var out_var = push(std::move(out), any_needs_grad({x}));
    if (!nodes_.back().needs_grad) return out_var;
    nodes_.back().backprop = [this, x, out_var, factor]() {
        const auto& g = nodes_[out_var.id].grad;
        auto& gx = grad_buffer(x.id);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * factor;
    };
    return out_var;
}

template <typename T>
typename BasicGraph<T>::Var BasicGraph<T>::flatten(Var x) {
    const auto& xv = node(x).val();
    if (xv.rank() < 2) shape_error("flatten", "needs a leading batch axis, got " + shape_string(xv.shape()));
    const int n = xv.dim(0);
    const int rest = static_cast<int>(xv.size() / static_cast<std::size_t>(n));
    Var out_var = push(xv.reshaped({n, rest}), any_needs_grad({x}));
    if (!nodes_.back().needs_grad) return out_var;
    nodes_.back().backprop = [this, x, out_var]() {
        const auto& g = nodes_[out_var.id].grad;
        auto& gx = grad_buffer(x.id);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    };
    return out_var;
}

template <typename T>
typename BasicGraph<T>::Var BasicGraph<T>::global_mean(Var x) {
    const auto& xv = node(x).val();
    if (xv.rank() != 4) shape_error("global_mean", "input must be [N,C,H,W], got " + shape_string(xv.shape()));
    const int n = xv.dim(0), c = xv.dim(1);
    const std::size_t hw = static_cast<std::size_t>(xv.dim(2)) * xv.dim(3);
    BasicTensor<T> out({n, c});
    for (std::size_t p = 0; p < static_cast<std::size_t>(n) * c; ++p) {
        T acc = T(0);
        for (std::size_t i = 0; i < hw; ++i) acc += xv[p * hw + i];
        out[p] = acc / static_cast<T>(hw);
    }
    Var out_var = push(std::move(out), any_needs_grad({x}));
    if (!nodes_.back().needs_grad) return out_var;
    nodes_.back().backprop = [this, x, out_var, hw]() {
        const auto& g = nodes_[out_var.id].grad;
        auto& gx = grad_buffer(x.id);
        for (std::size_t p = 0; p < g.size(); ++p) {
            const T share = g[p] / static_cast<T>(hw);
            for (std::size_t i = 0; i < hw; ++i) gx[p * hw + i] += share;
        }
    };
    return out_var;
}

template <typename T>
typename BasicGraph<T>::Var BasicGraph<T>::concat(std::span<const Var> parts) {
    if (parts.empty()) shape_error("concat", "no inputs");
    const int n = node(parts[0]).val().rank() == 2 ? node(parts[0]).val().dim(0) : -1;
    std::vector<int> widths;
    bool ng = false;
    for (Var p : parts) {
        const auto& v = node(p).val();
        if (v.rank() != 2 || v.dim(0) != n) shape_error("concat", "all inputs must be [N,k] with equal N, got " + shape_string(v.shape()));
        widths.push_back(v.dim(1));
        ng = ng || node(p).needs_grad;
    }
    const int total = std::accumulate(widths.begin(), widths.end(), 0);
    BasicTensor<T> out({n, total});
    int col = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const auto& v = node(parts[k]).val();
        for (int r = 0; r < n; ++r) {
            for (int j = 0; j < widths[k]; ++j) {
                out[static_cast<std::size_t>(r) * total + col + j] = v[static_cast<std::size_t>(r) * widths[k] + j];
            }
        }
        col += widths[k];
    }
    Var out_var = push(std::move(out), ng);
    if (!nodes_.back().needs_grad) return out_var;
    std::vector<Var> inputs(parts.begin(), parts.end());
    nodes_.back().backprop = [this, inputs, widths, out_var, n, total]() {
        const auto& g = nodes_[out_var.id].grad;
        int col = 0;
        for (std::size_t k = 0; k < inputs.size(); ++k) {
            if (nodes_[inputs[k].id].needs_grad) {
                auto& gv = grad_buffer(inputs[k].id);
                for (int r = 0; r < n; ++r) {
                    for (int j = 0; j < widths[k]; ++j) {
                        gv[static_cast<std::size_t>(r) * widths[k] + j] += g[static_cast<std::size_t>(r) * total + col + j];
                    }
                }
            }
            col += widths[k];
        }
    };
    return out_var;
}

template <typename T>
typename BasicGraph<T>::Var BasicGraph<T>::sum(Var x) {
    const auto& xv = node(x).val();
    T acc = T(0);
    for (T v : xv.data()) acc += v;
    Var out_var = push(BasicTensor<T>({1}, std::vector<T>{acc}), any_needs_grad({x}));
    if (!nodes_.back().needs_grad) return out_var;
    nodes_.back().backprop = [this, x, out_var]() {
        const T g = nodes_[out_var.id].grad[0];
        for (T& v : grad_buffer(x.id).data()) v += g;
    };
    return out_var;
}

template <typename T>
typename BasicGraph<T>::Var BasicGraph<T>::mean(Var x) {
    const std::size_t n = node(x).val().size();
    return scale(sum(x), T(1) / static_cast<T>(n));
}

template <typename T>
typename BasicGraph<T>::Var BasicGraph<T>::dueling_combine(Var value, Var advantage) {
    const auto& vv = node(value).val();
    const auto& av = node(advantage).val();
    if (av.rank() != 2) shape_error("dueling_combine", "advantage must be [N,K], got " + shape_string(av.shape()));
    const int n = av.dim(0), k = av.dim(1);
    if (vv.rank() != 2 || vv.dim(0) != n || vv.dim(1) != 1) shape_error("dueling_combine", "value must be [" + std::to_string(n) + ",1], got " + shape_string(vv.shape()));
    BasicTensor<T> out({n, k});
    for (int r = 0; r < n; ++r) {
        const T* a = av.data().data() + static_cast<std::size_t>(r) * k;
        // double sum: a constant row gives a - mean == 0 exactly
        double m = 0.0;
        for (int j = 0; j < k; ++j) m += static_cast<double>(a[j]);
        m /= k;
        const double v = static_cast<double>(vv[static_cast<std::size_t>(r)]);
        for (int j = 0; j < k; ++j)
            out[static_cast<std::size_t>(r) * k + j] = static_cast<T>(v + (static_cast<double>(a[j]) - m));
    }
    Var out_var = push(std::move(out), any_needs_grad({value, advantage}));
    if (!nodes_.back().needs_grad) return out_var;
    nodes_.back().backprop = [this, value, advantage, out_var, n, k]() {
        const auto& g = nodes_[out_var.id].grad;
        for (int r = 0; r < n; ++r) {
            const T* gr = g.data().data() + static_cast<std::size_t>(r) * k;
            T gs = T(0);
            for (int j = 0; j < k; ++j) gs += gr[j];
            if (nodes_[value.id].needs_grad) grad_buffer(value.id)[static_cast<std::size_t>(r)] += gs;
            if (nodes_[advantage.id].needs_grad) {
                auto& ga = grad_buffer(advantage.id);
                const T mean_g = gs / static_cast<T>(k);
                for (int j = 0; j < k; ++j) ga[static_cast<std::size_t>(r) * k + j] += gr[j] - mean_g;
            }
        }
    };
    return out_var;
}

template <typename T>
typename BasicGraph<T>::Var BasicGraph<T>::gather(Var x, std::vector<int> columns) {
    const auto& xv = node(x).val();
    if (xv.rank() != 2) shape_error("gather", "input must be [N,K], got " + shape_string(xv.shape()));
    const int n = xv.dim(0), k = xv.dim(1);
    if (static_cast<int>(columns.size()) != n) shape_error("gather", "need one column per row");
    BasicTensor<T> out({n});
    for (int r = 0; r < n; ++r) {
        const int c = columns[static_cast<std::size_t>(r)];
        if (c < 0 || c >= k) shape_error("gather", "column " + std::to_string(c) + " out of range");
        out[static_cast<std::size_t>(r)] = xv[static_cast<std::size_t>(r) * k + c];
    }
    Var out_var = push(std::move(out), any_needs_grad({x}));
    if (!nodes_.back().needs_grad) return out_var;
    nodes_.back().backprop = [this, x, out_var, columns = std::move(columns), k]() {
        const auto& g = nodes_[out_var.id].grad;
        auto& gx = grad_buffer(x.id);
        for (std::size_t r = 0; r < columns.size(); ++r) gx[r * k + columns[r]] += g[r];
    };
    return out_var;
}

template <typename T>
typename BasicGraph<T>::Var BasicGraph<T>::huber(Var prediction, std::vector<T> target, T kappa) {
    const auto& pv = node(prediction).val();
    if (target.size() != pv.size()) shape_error("huber", "target length mismatch");
    if (!(kappa > T(0))) shape_error("huber", "kappa must be positive");
    BasicTensor<T> out(pv.shape());
    for (std::size_t i = 0; i < pv.size(); ++i) out[i] = huber_value(pv[i], target[i], kappa);
    Var out_var = push(std::move(out), any_needs_grad({prediction}));
    if (!nodes_.back().needs_grad) return out_var;
    nodes_.back().backprop = [this, prediction, out_var, target = std::move(target), kappa]() {
        const auto& g = nodes_[out_var.id].grad;
        const auto& pv = nodes_[prediction.id].val();
        auto& gp = grad_buffer(prediction.id);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const T delta = pv[i] - target[i];
            const T d = delta > kappa ? kappa : (delta < -kappa ? -kappa : delta);
            gp[i] += g[i] * d;
        }
    };
    return out_var;
}

template <typename T>
typename BasicGraph<T>::Var BasicGraph<T>::squared_error(Var prediction, std::vector<T> target) {
    const auto& pv = node(prediction).val();
    if (target.size() != pv.size()) shape_error("squared_error", "target length mismatch");
    BasicTensor<T> out(pv.shape());
    for (std::size_t i = 0; i < pv.size(); ++i) {
        const T d = pv[i] - target[i];
        out[i] = d * d;
    }
    Var out_var = push(std::move(out), any_needs_grad({prediction}));
    if (!nodes_.back().needs_grad) return out_var;
    nodes_.back().backprop = [this, prediction, out_var, target = std::move(target)]() {
        const auto& g = nodes_[out_var.id].grad;
        const auto& pv = nodes_[prediction.id].val();
        auto& gp = grad_buffer(prediction.id);
        for (std::size_t i = 0; i < g.size(); ++i) gp[i] += g[i] * T(2) * (pv[i] - target[i]);
    };
    return out_var;
}

template <typename T>
void BasicGraph<T>::backward(Var loss) {
    const auto& lv = node(loss).val();
    if (lv.size() != 1) throw std::invalid_argument("backward: loss must be a scalar, got shape " + shape_string(lv.shape()));
    for (auto& n : nodes_) n.grad = BasicTensor<T>();
    if (!node(loss).needs_grad) return;
    grad_buffer(loss.id)[0] = T(1);
    for (int id = loss.id; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (n.backprop && !n.grad.empty()) n.backprop();
    }
}

template <typename T>
const BasicTensor<T>& BasicGraph<T>::value(Var v) const {
    return node(v).val();
}

template <typename T>
BasicTensor<T> BasicGraph<T>::grad(Var v) const {
    const Node& n = node(v);
    return n.grad.empty() ? BasicTensor<T>(n.val().shape()) : n.grad;
}

template <typename T>
Gradients<T> BasicGraph<T>::parameter_gradients(const BasicNetworkParams<T>& params) const {
    Gradients<T> out;
    out.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) out.emplace_back(params.entry(i).value.shape());
    for (const Node& n : nodes_) {
        if (n.params != &params || n.grad.empty()) continue;
        auto& dst = out[n.param_index];
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += n.grad[i];
    }
    return out;
}

template class BasicGraph<float>;
template class BasicGraph<double>;

}  // namespace eccl
