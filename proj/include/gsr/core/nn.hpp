#ifndef GSR_CORE_NN_HPP
#define GSR_CORE_NN_HPP

#include <string>
#include <unordered_map>
#include <vector>

#include "gsr/core/graph.hpp"
#include "gsr/core/rng.hpp"
#include "gsr/core/tensor.hpp"

namespace gsr {

enum class Init { Zeros, Ones, HeNormal, SmallNormal };

template <typename S>
struct Param {
    std::string name;
    Tensor<S> value;
};

// Named parameter set. Initialization is seeded per name so parameter values
// do not depend on registration order.
template <typename S>
class ParamStore {
public:
    explicit ParamStore(uint64_t seed = 0) : seed_(seed) {}

    int add(const std::string& name, Shape shape, Init init, int fan_in = 0) {
        if (byname_.count(name)) throw Error("duplicate parameter: " + name);
        Param<S> p;
        p.name = name;
        p.value = Tensor<S>(shape);
        Rng rng(mix64(seed_, fnv1a64(name)));
        switch (init) {
            case Init::Zeros: break;
            case Init::Ones: p.value.data.setOnes(); break;
            case Init::HeNormal: {
                double std = std::sqrt(2.0 / std::max(1, fan_in));
                for (int64_t i = 0; i < p.value.numel(); ++i)
                    p.value.data[i] = static_cast<S>(rng.normal(0.0, std));
                break;
            }
            case Init::SmallNormal:
                for (int64_t i = 0; i < p.value.numel(); ++i)
                    p.value.data[i] = static_cast<S>(rng.normal(0.0, 0.02));
                break;
        }
        params_.push_back(std::move(p));
        byname_[name] = static_cast<int>(params_.size()) - 1;
        return static_cast<int>(params_.size()) - 1;
    }

    Param<S>& at(int i) { return params_[static_cast<size_t>(i)]; }
    const Param<S>& at(int i) const { return params_[static_cast<size_t>(i)]; }
    int find(const std::string& name) const {
        auto it = byname_.find(name);
        return it == byname_.end() ? -1 : it->second;
    }
    int count() const { return static_cast<int>(params_.size()); }
    uint64_t seed() const { return seed_; }

    int64_t total_scalars() const {
        int64_t n = 0;
        for (const auto& p : params_) n += p.value.numel();
        return n;
    }

    template <typename T>
    ParamStore<T> cast() const {
        ParamStore<T> out(seed_);
        for (const auto& p : params_) {
            int i = out.add(p.name, p.value.shape, Init::Zeros);
            out.at(i).value = p.value.template cast<T>();
        }
        return out;
    }

private:
    uint64_t seed_;
    std::vector<Param<S>> params_;
    std::unordered_map<std::string, int> byname_;
};

// Per-graph binding of store parameters to leaf nodes. trainable=false makes
// gradient flow into the bound parameters structurally impossible.
template <typename S>
struct Binding {
    Graph<S>& g;
    ParamStore<S>& store;
    bool trainable = true;

    Binding(Graph<S>& g_, ParamStore<S>& s, bool train = true)
        : g(g_), store(s), trainable(train), vars_(static_cast<size_t>(s.count()), nullptr) {}

    typename Graph<S>::Var operator()(int idx) {
        auto& v = vars_.at(static_cast<size_t>(idx));
        if (!v) v = g.leaf(store.at(idx).value, trainable);
        return v;
    }

    // add this graph's parameter gradients into acc (indexed by param id)
    void accumulate_grads(std::vector<Tensor<S>>& acc) const {
        for (size_t i = 0; i < vars_.size(); ++i) {
            if (!vars_[i] || !vars_[i]->needs_grad) continue;
            if (acc[i].numel() == 0) acc[i] = Tensor<S>(store.at(static_cast<int>(i)).value.shape);
            acc[i].data += vars_[i]->grad.data;
        }
    }

private:
    std::vector<typename Graph<S>::Var> vars_;
};

template <typename S>
using Var = typename Graph<S>::Var;

// ---- layers -------------------------------------------------------------

template <typename S>
struct Linear {
    int w = -1, b = -1;
    Linear() = default;
    Linear(ParamStore<S>& ps, const std::string& name, int din, int dout, bool bias = true,
           Init init = Init::HeNormal) {
        w = ps.add(name + ".w", {dout, din}, init, din);
        if (bias) b = ps.add(name + ".b", {dout}, Init::Zeros);
    }
    Var<S> fwd(Binding<S>& ctx, Var<S> x) const {
        return ctx.g.linear(x, ctx(w), b >= 0 ? ctx(b) : nullptr);
    }
};

template <typename S>
struct Conv2d {
    int w = -1, b = -1;
    int k = 3, stride = 1, pad = 1;
    Conv2d() = default;
    Conv2d(ParamStore<S>& ps, const std::string& name, int cin, int cout, int k_ = 3,
           int stride_ = 1, int pad_ = 1, Init init = Init::HeNormal)
        : k(k_), stride(stride_), pad(pad_) {
        w = ps.add(name + ".w", {cout, cin * k * k}, init, cin * k * k);
        b = ps.add(name + ".b", {cout}, Init::Zeros);
    }
    Var<S> fwd(Binding<S>& ctx, Var<S> x) const {
        return ctx.g.conv2d(x, ctx(w), ctx(b), k, stride, pad);
    }
};

template <typename S>
struct GroupNorm {
    int gamma = -1, beta = -1, groups = 8;
    GroupNorm() = default;
    GroupNorm(ParamStore<S>& ps, const std::string& name, int channels, int groups_ = 8)
        : groups(groups_) {
        gamma = ps.add(name + ".g", {channels}, Init::Ones);
        beta = ps.add(name + ".b", {channels}, Init::Zeros);
    }
    Var<S> fwd(Binding<S>& ctx, Var<S> x) const {
        return ctx.g.group_norm(x, ctx(gamma), ctx(beta), groups);
    }
};

template <typename S>
struct LayerNorm {
    int gamma = -1, beta = -1;
    LayerNorm() = default;
    LayerNorm(ParamStore<S>& ps, const std::string& name, int d) {
        gamma = ps.add(name + ".g", {d}, Init::Ones);
        beta = ps.add(name + ".b", {d}, Init::Zeros);
    }
    Var<S> fwd(Binding<S>& ctx, Var<S> x) const {
        return ctx.g.layer_norm_rows(x, ctx(gamma), ctx(beta));
    }
};

// Multi-head cross attention, standard Softmax(QK^T/sqrt(d))V per head.
// zero_out initializes the output projection to zero so the block is an
// exact no-op contribution until trained.
template <typename S>
struct CrossAttention {
    Linear<S> wq, wk, wv, wo;
    int d_model = 0, heads = 1;
    CrossAttention() = default;
    CrossAttention(ParamStore<S>& ps, const std::string& name, int dq_in, int dkv_in, int d_model_,
                   int heads_, bool zero_out = false)
        : d_model(d_model_), heads(heads_) {
        if (d_model % heads != 0) throw ShapeError("attention: d_model % heads != 0");
        wq = Linear<S>(ps, name + ".q", dq_in, d_model);
        wk = Linear<S>(ps, name + ".k", dkv_in, d_model);
        wv = Linear<S>(ps, name + ".v", dkv_in, d_model);
        wo = Linear<S>(ps, name + ".o", d_model, d_model, true,
                       zero_out ? Init::Zeros : Init::HeNormal);
    }

    Var<S> fwd(Binding<S>& ctx, Var<S> q_in, Var<S> kv_in) const {
        if (kv_in->val.dim(0) < 1) throw EmptyKeyError("attention: empty key set");
        Graph<S>& g = ctx.g;
        Var<S> q = wq.fwd(ctx, q_in);
        Var<S> k = wk.fwd(ctx, kv_in);
        Var<S> v = wv.fwd(ctx, kv_in);
        const int dh = d_model / heads;
        std::vector<Var<S>> outs;
        outs.reserve(static_cast<size_t>(heads));
        for (int h = 0; h < heads; ++h) {
            Var<S> qh = g.slice_cols(q, h * dh, (h + 1) * dh);
            Var<S> kh = g.slice_cols(k, h * dh, (h + 1) * dh);
            Var<S> vh = g.slice_cols(v, h * dh, (h + 1) * dh);
            Var<S> scores = g.scale(g.matmul(qh, kh, false, true),
                                    S(1) / static_cast<S>(std::sqrt(double(dh))));
            outs.push_back(g.matmul(g.softmax_rows(scores), vh));
        }
        return wo.fwd(ctx, g.concat_cols(outs));
    }
};

// Conv block with timestep injection: two 3x3 convs around GroupNorm/SiLU,
// additive residual, learned skip projection when widths change.
template <typename S>
struct ResBlock {
    GroupNorm<S> gn1, gn2;
    Conv2d<S> conv1, conv2, skip;
    Linear<S> temb_proj;
    bool has_skip = false, has_temb = false;
    int cout = 0;

    ResBlock() = default;
    ResBlock(ParamStore<S>& ps, const std::string& name, int cin, int cout_, int temb_dim,
             int gn_groups = 8)
        : cout(cout_) {
        gn1 = GroupNorm<S>(ps, name + ".gn1", cin, gn_groups);
        conv1 = Conv2d<S>(ps, name + ".conv1", cin, cout);
        gn2 = GroupNorm<S>(ps, name + ".gn2", cout, gn_groups);
        conv2 = Conv2d<S>(ps, name + ".conv2", cout, cout);
        if (cin != cout) {
            skip = Conv2d<S>(ps, name + ".skip", cin, cout, 1, 1, 0);
            has_skip = true;
        }
        if (temb_dim > 0) {
            temb_proj = Linear<S>(ps, name + ".temb", temb_dim, cout);
            has_temb = true;
        }
    }

    // temb: (1, temb_dim) or nullptr
    Var<S> fwd(Binding<S>& ctx, Var<S> x, Var<S> temb = nullptr) const {
        Graph<S>& g = ctx.g;
        Var<S> h = conv1.fwd(ctx, g.silu(gn1.fwd(ctx, x)));
        if (has_temb && temb) {
            Var<S> t = temb_proj.fwd(ctx, g.silu(temb));
            h = g.add_chbias(h, g.reshape(t, {cout}));
        }
        h = conv2.fwd(ctx, g.silu(gn2.fwd(ctx, h)));
        Var<S> s = has_skip ? skip.fwd(ctx, x) : x;
        return g.add(s, h);
    }
};

// sinusoidal embedding of a nonnegative index; interleaved [sin, cos] pairs
template <typename S>
Tensor<S> sinusoid_embedding(double t, int dim) {
    if (dim % 2 != 0) throw ShapeError("sinusoid embedding dim must be even");
    Tensor<S> out(Shape{1, dim});
    for (int i = 0; i < dim / 2; ++i) {
        double omega = std::pow(10000.0, -2.0 * i / dim);
        out.data[2 * i] = static_cast<S>(std::sin(t * omega));
        out.data[2 * i + 1] = static_cast<S>(std::cos(t * omega));
    }
    return out;
}

// ---- optimizer ----------------------------------------------------------

template <typename S>
class Adam {
public:
    explicit Adam(S lr, S beta1 = S(0.9), S beta2 = S(0.999), S eps = S(1e-8))
        : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

    void step(ParamStore<S>& ps, const std::vector<Tensor<S>>& grads) {
        if (m_.empty()) {
            m_.resize(static_cast<size_t>(ps.count()));
            v_.resize(static_cast<size_t>(ps.count()));
            for (int i = 0; i < ps.count(); ++i) {
                m_[static_cast<size_t>(i)] = Tensor<S>(ps.at(i).value.shape);
                v_[static_cast<size_t>(i)] = Tensor<S>(ps.at(i).value.shape);
            }
        }
        ++t_;
        S c1 = S(1) - static_cast<S>(std::pow(double(b1_), double(t_)));
        S c2 = S(1) - static_cast<S>(std::pow(double(b2_), double(t_)));
        for (int i = 0; i < ps.count(); ++i) {
            if (grads[static_cast<size_t>(i)].numel() == 0) continue;  // parameter unused
            auto& g = grads[static_cast<size_t>(i)].data;
            auto& m = m_[static_cast<size_t>(i)].data;
            auto& v = v_[static_cast<size_t>(i)].data;
            m = b1_ * m + (S(1) - b1_) * g;
            v = b2_ * v + (S(1) - b2_) * g.square();
            ps.at(i).value.data -= lr_ * (m / c1) / ((v / c2).sqrt() + eps_);
        }
    }

    void set_lr(S lr) { lr_ = lr; }
    int64_t steps() const { return t_; }

private:
    S lr_, b1_, b2_, eps_;
    int64_t t_ = 0;
    std::vector<Tensor<S>> m_, v_;
};

}  // namespace gsr

#endif
