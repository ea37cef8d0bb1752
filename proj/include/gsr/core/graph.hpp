#ifndef GSR_CORE_GRAPH_HPP
#define GSR_CORE_GRAPH_HPP

#include <cmath>
#include <deque>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "gsr/core/tensor.hpp"

namespace gsr {

// Reverse-mode autodiff over a per-sample tape. Nodes are created in forward
// order; backward() replays the tape in reverse. Node storage is a deque so
// pointers stay stable.
template <typename S>
struct Node {
    Tensor<S> val;
    Tensor<S> grad;  // allocated only when needs_grad
    bool needs_grad = false;
    std::function<void()> back;  // empty for leaves
};

template <typename S>
class Graph {
public:
    using Var = Node<S>*;

    Var leaf(Tensor<S> v, bool needs_grad = false) {
        return make(std::move(v), needs_grad, nullptr);
    }

    size_t size() const { return nodes_.size(); }

    void backward(Var root) {
        if (root->val.numel() != 1) throw ShapeError("backward root must be scalar");
        if (!root->needs_grad) throw Error("backward on a graph with no gradients");
        root->grad.data.setOnes();
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
            if (it->needs_grad && it->back) it->back();
        }
    }

    // ---- elementwise ----

    Var add(Var a, Var b) {
        if (!a->val.same_shape(b->val)) throw ShapeError("add: shape mismatch");
        Tensor<S> out = a->val;
        out.data += b->val.data;
        Var n = make(std::move(out), a->needs_grad || b->needs_grad, nullptr);
        if (n->needs_grad)
            n->back = [a, b, n] {
                if (a->needs_grad) a->grad.data += n->grad.data;
                if (b->needs_grad) b->grad.data += n->grad.data;
            };
        return n;
    }

    Var sub(Var a, Var b) {
        if (!a->val.same_shape(b->val)) throw ShapeError("sub: shape mismatch");
        Tensor<S> out = a->val;
        out.data -= b->val.data;
        Var n = make(std::move(out), a->needs_grad || b->needs_grad, nullptr);
        if (n->needs_grad)
            n->back = [a, b, n] {
                if (a->needs_grad) a->grad.data += n->grad.data;
                if (b->needs_grad) b->grad.data -= n->grad.data;
            };
        return n;
    }

    Var mul(Var a, Var b) {
        if (!a->val.same_shape(b->val)) throw ShapeError("mul: shape mismatch");
        Tensor<S> out = a->val;
        out.data *= b->val.data;
        Var n = make(std::move(out), a->needs_grad || b->needs_grad, nullptr);
        if (n->needs_grad)
            n->back = [a, b, n] {
                if (a->needs_grad) a->grad.data += n->grad.data * b->val.data;
                if (b->needs_grad) b->grad.data += n->grad.data * a->val.data;
            };
        return n;
    }

    Var scale(Var a, S c) {
        Tensor<S> out = a->val;
        out.data *= c;
        Var n = make(std::move(out), a->needs_grad, nullptr);
        if (n->needs_grad)
            n->back = [a, n, c] { a->grad.data += n->grad.data * c; };
        return n;
    }

    Var silu(Var a) {
        Tensor<S> out = a->val;
        out.data = a->val.data / (S(1) + (-a->val.data).exp());
        Var n = make(std::move(out), a->needs_grad, nullptr);
        if (n->needs_grad)
            n->back = [a, n] {
                ArrX<S> sig = S(1) / (S(1) + (-a->val.data).exp());
                a->grad.data += n->grad.data * sig * (S(1) + a->val.data * (S(1) - sig));
            };
        return n;
    }

    Var sigmoid(Var a) {
        Tensor<S> out = a->val;
        out.data = S(1) / (S(1) + (-a->val.data).exp());
        Var n = make(std::move(out), a->needs_grad, nullptr);
        if (n->needs_grad)
            n->back = [a, n] {
                a->grad.data += n->grad.data * n->val.data * (S(1) - n->val.data);
            };
        return n;
    }

    // ---- broadcast adds ----

    // (n, d) + (d)
    Var add_rowvec(Var a, Var v) {
        int nrows = a->val.dim(0);
        int d = static_cast<int>(a->val.numel() / nrows);
        if (v->val.numel() != d) throw ShapeError("add_rowvec: width mismatch");
        Tensor<S> out = a->val;
        out.mat(nrows, d).rowwise() += v->val.mat(1, d).row(0);
        Var n = make(std::move(out), a->needs_grad || v->needs_grad, nullptr);
        if (n->needs_grad)
            n->back = [a, v, n, nrows, d] {
                if (a->needs_grad) a->grad.data += n->grad.data;
                if (v->needs_grad)
                    v->grad.mat(1, d).row(0) += n->grad.mat(nrows, d).colwise().sum();
            };
        return n;
    }

    // (C,H,W) + (C)
    Var add_chbias(Var a, Var b) {
        int C = a->val.dim(0);
        int hw = static_cast<int>(a->val.numel() / C);
        if (b->val.numel() != C) throw ShapeError("add_chbias: channel mismatch");
        Tensor<S> out = a->val;
        out.mat(C, hw).colwise() += b->val.mat(C, 1).col(0);
        Var n = make(std::move(out), a->needs_grad || b->needs_grad, nullptr);
        if (n->needs_grad)
            n->back = [a, b, n, C, hw] {
                if (a->needs_grad) a->grad.data += n->grad.data;
                if (b->needs_grad)
                    b->grad.mat(C, 1).col(0) += n->grad.mat(C, hw).rowwise().sum();
            };
        return n;
    }

    // ---- matrix ops ----

    // C = op(A) * op(B); transposes via flags, TT unsupported
    Var matmul(Var a, Var b, bool ta = false, bool tb = false) {
        if (ta && tb) throw ShapeError("matmul: TT form unsupported");
        auto [am, ak] = dims2(a);
        auto [bk, bn] = dims2(b);
        int m = ta ? ak : am, k = ta ? am : ak;
        int kb = tb ? bn : bk, nn = tb ? bk : bn;
        if (k != kb) throw ShapeError("matmul: inner dim mismatch");
        Tensor<S> out(Shape{m, nn});
        auto A = a->val.mat(am, ak), B = b->val.mat(bk, bn);
        auto C = out.mat(m, nn);
        if (!ta && !tb) C.noalias() = A * B;
        else if (!ta && tb) C.noalias() = A * B.transpose();
        else C.noalias() = A.transpose() * B;
        Var n = make(std::move(out), a->needs_grad || b->needs_grad, nullptr);
        if (n->needs_grad)
            n->back = [a, b, n, ta, tb, am, ak, bk, bn, m, nn] {
                auto A = a->val.mat(am, ak), B = b->val.mat(bk, bn);
                auto G = n->grad.mat(m, nn);
                if (!ta && !tb) {
                    if (a->needs_grad) a->grad.mat(am, ak).noalias() += G * B.transpose();
                    if (b->needs_grad) b->grad.mat(bk, bn).noalias() += A.transpose() * G;
                } else if (!ta && tb) {
                    if (a->needs_grad) a->grad.mat(am, ak).noalias() += G * B;
                    if (b->needs_grad) b->grad.mat(bk, bn).noalias() += G.transpose() * A;
                } else {  // TN
                    if (a->needs_grad) a->grad.mat(am, ak).noalias() += B * G.transpose();
                    if (b->needs_grad) b->grad.mat(bk, bn).noalias() += A * G;
                }
            };
        return n;
    }

    // y = x * W^T + b with x (n, din), W (dout, din), b (dout) or null
    Var linear(Var x, Var w, Var b) {
        Var y = matmul(x, w, false, true);
        return b ? add_rowvec(y, b) : y;
    }

    Var softmax_rows(Var a) {
        auto [r, c] = dims2(a);
        Tensor<S> out(Shape{r, c});
        auto X = a->val.mat(r, c);
        auto Y = out.mat(r, c);
        for (int i = 0; i < r; ++i) {
            S mx = X.row(i).maxCoeff();
            Y.row(i) = (X.row(i).array() - mx).exp();
            Y.row(i) /= Y.row(i).sum();
        }
        Var n = make(std::move(out), a->needs_grad, nullptr);
        if (n->needs_grad)
            n->back = [a, n, r, c] {
                auto Y = n->val.mat(r, c);
                auto G = n->grad.mat(r, c);
                auto DX = a->grad.mat(r, c);
                for (int i = 0; i < r; ++i) {
                    S dot = (G.row(i).array() * Y.row(i).array()).sum();
                    DX.row(i).array() += (G.row(i).array() - dot) * Y.row(i).array();
                }
            };
        return n;
    }

    // (C,H,W) -> (H*W, C) token view
    Var hw_to_rows(Var a) {
        int C = a->val.dim(0), H = a->val.dim(1), W = a->val.dim(2);
        int hw = H * W;
        Tensor<S> out(Shape{hw, C});
        out.mat(hw, C) = a->val.mat(C, hw).transpose();
        Var n = make(std::move(out), a->needs_grad, nullptr);
        if (n->needs_grad)
            n->back = [a, n, C, hw] {
                a->grad.mat(C, hw) += n->grad.mat(hw, C).transpose();
            };
        return n;
    }

    // (H*W, C) -> (C,H,W)
    Var rows_to_hw(Var a, int H, int W) {
        int hw = a->val.dim(0), C = a->val.dim(1);
        if (hw != H * W) throw ShapeError("rows_to_hw: row count mismatch");
        Tensor<S> out(Shape{C, H, W});
        out.mat(C, hw) = a->val.mat(hw, C).transpose();
        Var n = make(std::move(out), a->needs_grad, nullptr);
        if (n->needs_grad)
            n->back = [a, n, C, hw] {
                a->grad.mat(hw, C) += n->grad.mat(C, hw).transpose();
            };
        return n;
    }

    Var reshape(Var a, Shape sh) {
        if (shape_numel(sh) != a->val.numel()) throw ShapeError("reshape: numel mismatch");
        Tensor<S> out(sh, a->val.data);
        Var n = make(std::move(out), a->needs_grad, nullptr);
        if (n->needs_grad)
            n->back = [a, n] { a->grad.data += n->grad.data; };
        return n;
    }

    // ---- concat / slice ----

    Var concat_ch(Var a, Var b) {
        int Ca = a->val.dim(0), Cb = b->val.dim(0);
        int H = a->val.dim(1), W = a->val.dim(2);
        if (b->val.dim(1) != H || b->val.dim(2) != W) throw ShapeError("concat_ch: spatial mismatch");
        Tensor<S> out(Shape{Ca + Cb, H, W});
        out.data.segment(0, a->val.numel()) = a->val.data;
        out.data.segment(a->val.numel(), b->val.numel()) = b->val.data;
        Var n = make(std::move(out), a->needs_grad || b->needs_grad, nullptr);
        if (n->needs_grad)
            n->back = [a, b, n] {
                if (a->needs_grad) a->grad.data += n->grad.data.segment(0, a->val.numel());
                if (b->needs_grad)
                    b->grad.data += n->grad.data.segment(a->val.numel(), b->val.numel());
            };
        return n;
    }

    Var slice_ch(Var a, int c0, int c1) {
        int C = a->val.dim(0), H = a->val.dim(1), W = a->val.dim(2);
        if (c0 < 0 || c1 > C || c0 >= c1) throw ShapeError("slice_ch: bad range");
        int hw = H * W;
        Tensor<S> out(Shape{c1 - c0, H, W});
        out.data = a->val.data.segment(static_cast<int64_t>(c0) * hw,
                                       static_cast<int64_t>(c1 - c0) * hw);
        Var n = make(std::move(out), a->needs_grad, nullptr);
        if (n->needs_grad)
            n->back = [a, n, c0, hw] {
                a->grad.data.segment(static_cast<int64_t>(c0) * hw, n->val.numel()) +=
                    n->grad.data;
            };
        return n;
    }

    Var slice_cols(Var a, int j0, int j1) {
        auto [r, c] = dims2(a);
        if (j0 < 0 || j1 > c || j0 >= j1) throw ShapeError("slice_cols: bad range");
        Tensor<S> out(Shape{r, j1 - j0});
        out.mat(r, j1 - j0) = a->val.mat(r, c).middleCols(j0, j1 - j0);
        Var n = make(std::move(out), a->needs_grad, nullptr);
        if (n->needs_grad)
            n->back = [a, n, r, c, j0, j1] {
                a->grad.mat(r, c).middleCols(j0, j1 - j0) += n->grad.mat(r, j1 - j0);
            };
        return n;
    }

    Var concat_cols(const std::vector<Var>& parts) {
        int r = parts.at(0)->val.dim(0), c = 0;
        bool ng = false;
        for (Var p : parts) {
            if (p->val.dim(0) != r) throw ShapeError("concat_cols: row mismatch");
            c += p->val.dim(1);
            ng = ng || p->needs_grad;
        }
        Tensor<S> out(Shape{r, c});
        int off = 0;
        for (Var p : parts) {
            out.mat(r, c).middleCols(off, p->val.dim(1)) = p->val.mat();
            off += p->val.dim(1);
        }
        Var n = make(std::move(out), ng, nullptr);
        if (n->needs_grad) {
            std::vector<Var> ps = parts;
            n->back = [ps, n, r, c] {
                int off = 0;
                for (Var p : ps) {
                    if (p->needs_grad)
                        p->grad.mat() += n->grad.mat(r, c).middleCols(off, p->val.dim(1));
                    off += p->val.dim(1);
                }
            };
        }
        return n;
    }

    Var concat_rows(Var a, Var b) {
        int ca = a->val.dim(1);
        if (b->val.dim(1) != ca) throw ShapeError("concat_rows: col mismatch");
        int ra = a->val.dim(0), rb = b->val.dim(0);
        Tensor<S> out(Shape{ra + rb, ca});
        out.data.segment(0, a->val.numel()) = a->val.data;
        out.data.segment(a->val.numel(), b->val.numel()) = b->val.data;
        Var n = make(std::move(out), a->needs_grad || b->needs_grad, nullptr);
        if (n->needs_grad)
            n->back = [a, b, n] {
                if (a->needs_grad) a->grad.data += n->grad.data.segment(0, a->val.numel());
                if (b->needs_grad)
                    b->grad.data += n->grad.data.segment(a->val.numel(), b->val.numel());
            };
        return n;
    }

    // ---- normalization ----

    Var group_norm(Var x, Var gamma, Var beta, int groups, S eps = S(1e-5)) {
        int C = x->val.dim(0), H = x->val.dim(1), W = x->val.dim(2);
        if (C % groups != 0) throw ShapeError("group_norm: channels not divisible by groups");
        const int cg = C / groups;
        const int64_t m = static_cast<int64_t>(cg) * H * W;
        Tensor<S> out(x->val.shape);
        auto xhat = std::make_shared<Tensor<S>>(x->val.shape);
        auto istd = std::make_shared<std::vector<S>>(groups);
        for (int g = 0; g < groups; ++g) {
            auto seg = x->val.data.segment(g * m, m);
            S mu = seg.mean();
            S var = (seg - mu).square().mean();
            S is = S(1) / std::sqrt(var + eps);
            (*istd)[static_cast<size_t>(g)] = is;
            xhat->data.segment(g * m, m) = (seg - mu) * is;
        }
        for (int c = 0; c < C; ++c)
            out.data.segment(static_cast<int64_t>(c) * H * W, H * W) =
                xhat->data.segment(static_cast<int64_t>(c) * H * W, H * W) * gamma->val.data[c] +
                beta->val.data[c];
        bool ng = x->needs_grad || gamma->needs_grad || beta->needs_grad;
        Var n = make(std::move(out), ng, nullptr);
        if (n->needs_grad)
            n->back = [x, gamma, beta, n, xhat, istd, groups, C, H, W, cg, m] {
                const int64_t hw = static_cast<int64_t>(H) * W;
                if (gamma->needs_grad || beta->needs_grad) {
                    for (int c = 0; c < C; ++c) {
                        auto g_seg = n->grad.data.segment(c * hw, hw);
                        if (gamma->needs_grad)
                            gamma->grad.data[c] += (g_seg * xhat->data.segment(c * hw, hw)).sum();
                        if (beta->needs_grad) beta->grad.data[c] += g_seg.sum();
                    }
                }
                if (x->needs_grad) {
                    ArrX<S> gh(m);
                    for (int g = 0; g < groups; ++g) {
                        for (int j = 0; j < cg; ++j) {
                            int c = g * cg + j;
                            gh.segment(j * hw, hw) =
                                n->grad.data.segment(c * hw, hw) * gamma->val.data[c];
                        }
                        auto xh = xhat->data.segment(g * m, m);
                        S mean_gh = gh.mean();
                        S mean_ghx = (gh * xh).mean();
                        x->grad.data.segment(g * m, m) +=
                            (*istd)[static_cast<size_t>(g)] * (gh - mean_gh - xh * mean_ghx);
                    }
                }
            };
        return n;
    }

    // per-row layer norm on (n, d); bypass==true returns input unchanged
    Var layer_norm_rows(Var x, Var gamma, Var beta, S eps = S(1e-5)) {
        auto [r, d] = dims2(x);
        Tensor<S> out(x->val.shape);
        auto xhat = std::make_shared<Tensor<S>>(x->val.shape);
        auto istd = std::make_shared<std::vector<S>>(r);
        auto X = x->val.mat(r, d);
        for (int i = 0; i < r; ++i) {
            S mu = X.row(i).mean();
            S var = (X.row(i).array() - mu).square().mean();
            S is = S(1) / std::sqrt(var + eps);
            (*istd)[static_cast<size_t>(i)] = is;
            xhat->mat(r, d).row(i) = (X.row(i).array() - mu) * is;
            out.mat(r, d).row(i) =
                xhat->mat(r, d).row(i).array() * gamma->val.data.transpose() +
                beta->val.data.transpose();
        }
        bool ng = x->needs_grad || gamma->needs_grad || beta->needs_grad;
        Var n = make(std::move(out), ng, nullptr);
        if (n->needs_grad)
            n->back = [x, gamma, beta, n, xhat, istd, r, d] {
                auto G = n->grad.mat(r, d);
                auto XH = xhat->mat(r, d);
                for (int i = 0; i < r; ++i) {
                    if (gamma->needs_grad)
                        gamma->grad.data += (G.row(i).array() * XH.row(i).array()).transpose();
                    if (beta->needs_grad) beta->grad.data += G.row(i).array().transpose();
                    if (x->needs_grad) {
                        ArrX<S> gh = G.row(i).array().transpose() * gamma->val.data;
                        ArrX<S> xh = XH.row(i).array().transpose();
                        S mean_gh = gh.mean();
                        S mean_ghx = (gh * xh).mean();
                        x->grad.mat(r, d).row(i).array() +=
                            ((*istd)[static_cast<size_t>(i)] * (gh - mean_gh - xh * mean_ghx))
                                .transpose();
                    }
                }
            };
        return n;
    }

    // ---- conv / resampling ----

    // x (Cin,H,W), w (Cout, Cin*k*k), b (Cout) or null
    Var conv2d(Var x, Var w, Var b, int k, int stride, int pad) {
        int Cin = x->val.dim(0), H = x->val.dim(1), W = x->val.dim(2);
        int Cout = w->val.dim(0);
        if (w->val.dim(1) != Cin * k * k) throw ShapeError("conv2d: weight shape mismatch");
        int Ho = (H + 2 * pad - k) / stride + 1;
        int Wo = (W + 2 * pad - k) / stride + 1;
        auto cols = std::make_shared<Tensor<S>>(Shape{Cin * k * k, Ho * Wo});
        im2col(x->val, k, stride, pad, Ho, Wo, *cols);
        Tensor<S> out(Shape{Cout, Ho, Wo});
        out.mat(Cout, Ho * Wo).noalias() = w->val.mat() * cols->mat();
        bool ng = x->needs_grad || w->needs_grad || (b && b->needs_grad);
        if (b) out.mat(Cout, Ho * Wo).colwise() += b->val.mat(Cout, 1).col(0);
        Var n = make(std::move(out), ng, nullptr);
        if (n->needs_grad)
            n->back = [x, w, b, n, cols, k, stride, pad, Cin, H, W, Cout, Ho, Wo] {
                auto G = n->grad.mat(Cout, Ho * Wo);
                if (w->needs_grad) w->grad.mat().noalias() += G * cols->mat().transpose();
                if (b && b->needs_grad) b->grad.mat(Cout, 1).col(0) += G.rowwise().sum();
                if (x->needs_grad) {
                    Tensor<S> dcols(Shape{Cin * k * k, Ho * Wo});
                    dcols.mat().noalias() = w->val.mat().transpose() * G;
                    col2im(dcols, k, stride, pad, Ho, Wo, x->grad);
                }
            };
        return n;
    }

    Var upsample_nearest2x(Var x) {
        int C = x->val.dim(0), H = x->val.dim(1), W = x->val.dim(2);
        Tensor<S> out(Shape{C, 2 * H, 2 * W});
        for (int c = 0; c < C; ++c)
            for (int i = 0; i < 2 * H; ++i)
                for (int j = 0; j < 2 * W; ++j)
                    out.data[(static_cast<int64_t>(c) * 2 * H + i) * 2 * W + j] =
                        x->val.data[(static_cast<int64_t>(c) * H + i / 2) * W + j / 2];
        Var n = make(std::move(out), x->needs_grad, nullptr);
        if (n->needs_grad)
            n->back = [x, n, C, H, W] {
                for (int c = 0; c < C; ++c)
                    for (int i = 0; i < 2 * H; ++i)
                        for (int j = 0; j < 2 * W; ++j)
                            x->grad.data[(static_cast<int64_t>(c) * H + i / 2) * W + j / 2] +=
                                n->grad.data[(static_cast<int64_t>(c) * 2 * H + i) * 2 * W + j];
            };
        return n;
    }

    // ---- lookup ----

    Var gather_rows(Var table, std::vector<int> idx) {
        auto [v, d] = dims2(table);
        int nrows = static_cast<int>(idx.size());
        Tensor<S> out(Shape{nrows, d});
        for (int i = 0; i < nrows; ++i) {
            if (idx[static_cast<size_t>(i)] < 0 || idx[static_cast<size_t>(i)] >= v)
                throw DomainError("gather_rows: index out of range");
            out.mat(nrows, d).row(i) = table->val.mat(v, d).row(idx[static_cast<size_t>(i)]);
        }
        Var n = make(std::move(out), table->needs_grad, nullptr);
        if (n->needs_grad)
            n->back = [table, n, idx = std::move(idx), v, d, nrows] {
                for (int i = 0; i < nrows; ++i)
                    table->grad.mat(v, d).row(idx[static_cast<size_t>(i)]) +=
                        n->grad.mat(nrows, d).row(i);
            };
        return n;
    }

    // ---- reductions / losses ----

    Var mean_rows(Var a) {  // (n,d) -> (d)
        auto [r, d] = dims2(a);
        Tensor<S> out(Shape{d});
        out.data = a->val.mat(r, d).colwise().mean().transpose().array();
        Var n = make(std::move(out), a->needs_grad, nullptr);
        if (n->needs_grad)
            n->back = [a, n, r, d] {
                a->grad.mat(r, d).rowwise() +=
                    (n->grad.data / S(r)).matrix().transpose();
            };
        return n;
    }

    Var mean_all(Var a) {
        Tensor<S> out(Shape{1});
        out.data[0] = a->val.data.mean();
        Var n = make(std::move(out), a->needs_grad, nullptr);
        if (n->needs_grad)
            n->back = [a, n] { a->grad.data += n->grad.data[0] / S(a->val.numel()); };
        return n;
    }

    Var mse(Var a, Var b) {
        if (!a->val.same_shape(b->val)) throw ShapeError("mse: shape mismatch");
        Tensor<S> out(Shape{1});
        out.data[0] = (a->val.data - b->val.data).square().mean();
        Var n = make(std::move(out), a->needs_grad || b->needs_grad, nullptr);
        if (n->needs_grad)
            n->back = [a, b, n] {
                ArrX<S> g =
                    n->grad.data[0] * S(2) / S(a->val.numel()) * (a->val.data - b->val.data);
                if (a->needs_grad) a->grad.data += g;
                if (b->needs_grad) b->grad.data -= g;
            };
        return n;
    }

    Var l1_mean(Var a, Var b) {
        if (!a->val.same_shape(b->val)) throw ShapeError("l1_mean: shape mismatch");
        Tensor<S> out(Shape{1});
        out.data[0] = (a->val.data - b->val.data).abs().mean();
        Var n = make(std::move(out), a->needs_grad || b->needs_grad, nullptr);
        if (n->needs_grad)
            n->back = [a, b, n] {
                ArrX<S> g = n->grad.data[0] / S(a->val.numel()) *
                            (a->val.data - b->val.data).sign();
                if (a->needs_grad) a->grad.data += g;
                if (b->needs_grad) b->grad.data -= g;
            };
        return n;
    }

    // mean cross-entropy of row-wise softmax against integer labels
    Var cross_entropy_rows(Var logits, std::vector<int> labels) {
        auto [r, c] = dims2(logits);
        if (static_cast<int>(labels.size()) != r) throw ShapeError("cross_entropy: label count");
        auto probs = std::make_shared<Tensor<S>>(Shape{r, c});
        auto X = logits->val.mat(r, c);
        S loss = 0;
        for (int i = 0; i < r; ++i) {
            S mx = X.row(i).maxCoeff();
            probs->mat(r, c).row(i) = (X.row(i).array() - mx).exp();
            S z = probs->mat(r, c).row(i).sum();
            probs->mat(r, c).row(i) /= z;
            loss -= std::log(probs->mat(r, c)(i, labels[static_cast<size_t>(i)]));
        }
        Tensor<S> out(Shape{1});
        out.data[0] = loss / S(r);
        Var n = make(std::move(out), logits->needs_grad, nullptr);
        if (n->needs_grad)
            n->back = [logits, n, probs, labels = std::move(labels), r, c] {
                auto P = probs->mat(r, c);
                auto DX = logits->grad.mat(r, c);
                S g = n->grad.data[0] / S(r);
                for (int i = 0; i < r; ++i) {
                    DX.row(i) += g * P.row(i);
                    DX(i, labels[static_cast<size_t>(i)]) -= g;
                }
            };
        return n;
    }

private:
    std::deque<Node<S>> nodes_;

    Var make(Tensor<S> val, bool needs_grad, std::function<void()> back) {
        nodes_.emplace_back();
        Node<S>& n = nodes_.back();
        n.val = std::move(val);
        n.needs_grad = needs_grad;
        n.back = std::move(back);
        if (needs_grad) n.grad = Tensor<S>(n.val.shape);
        return &n;
    }

    static std::pair<int, int> dims2(Var a) {
        if (a->val.rank() != 2) throw ShapeError("expected rank-2 tensor, got " +
                                                 shape_str(a->val.shape));
        return {a->val.dim(0), a->val.dim(1)};
    }

    static void im2col(const Tensor<S>& x, int k, int stride, int pad, int Ho, int Wo,
                       Tensor<S>& cols) {
        int Cin = x.dim(0), H = x.dim(1), W = x.dim(2);
        cols.data.setZero();
        const int hwo = Ho * Wo;
        for (int ci = 0; ci < Cin; ++ci)
            for (int ki = 0; ki < k; ++ki)
                for (int kj = 0; kj < k; ++kj) {
                    S* dst = cols.ptr() + (static_cast<int64_t>(ci) * k * k + ki * k + kj) * hwo;
                    const S* src = x.ptr() + static_cast<int64_t>(ci) * H * W;
                    for (int oh = 0; oh < Ho; ++oh) {
                        int ih = oh * stride - pad + ki;
                        if (ih < 0 || ih >= H) continue;
                        for (int ow = 0; ow < Wo; ++ow) {
                            int iw = ow * stride - pad + kj;
                            if (iw < 0 || iw >= W) continue;
                            dst[oh * Wo + ow] = src[ih * W + iw];
                        }
                    }
                }
    }

    static void col2im(const Tensor<S>& cols, int k, int stride, int pad, int Ho, int Wo,
                       Tensor<S>& dx) {
        int Cin = dx.dim(0), H = dx.dim(1), W = dx.dim(2);
        const int hwo = Ho * Wo;
        for (int ci = 0; ci < Cin; ++ci)
            for (int ki = 0; ki < k; ++ki)
                for (int kj = 0; kj < k; ++kj) {
                    const S* src = cols.ptr() + (static_cast<int64_t>(ci) * k * k + ki * k + kj) * hwo;
                    S* dst = dx.ptr() + static_cast<int64_t>(ci) * H * W;
                    for (int oh = 0; oh < Ho; ++oh) {
                        int ih = oh * stride - pad + ki;
                        if (ih < 0 || ih >= H) continue;
                        for (int ow = 0; ow < Wo; ++ow) {
                            int iw = ow * stride - pad + kj;
                            if (iw < 0 || iw >= W) continue;
                            dst[ih * W + iw] += src[oh * Wo + ow];
                        }
                    }
                }
    }
};

}  // namespace gsr

#endif
