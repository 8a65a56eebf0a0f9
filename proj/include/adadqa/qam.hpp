#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "adadqa/rng.hpp"
#include "adadqa/tensor.hpp"

namespace adadqa {

// Exact Gaussian-CDF GELU: x * Phi(x).
template <typename T>
T gelu(T x) {
    return x * T(0.5) * (T(1) + std::erf(x / std::sqrt(T(2))));
}

template <typename T>
T gelu_grad(T x) {
    const T phi_cdf = T(0.5) * (T(1) + std::erf(x / std::sqrt(T(2))));
    const T phi_pdf = std::exp(-x * x / T(2)) / std::sqrt(T(2) * T(3.14159265358979323846L));
    return phi_cdf + x * phi_pdf;
}

template <typename T>
T sigmoid(T x) {
    return T(1) / (T(1) + std::exp(-x));
}

// Zero-mean uniform init scaled by 1/sqrt(fan_in); biases stay zero.
template <typename T>
void init_uniform(Tensor<T>& t, int fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : t.data) v = static_cast<T>(rng.uniform(-bound, bound));
}

inline constexpr double kLayerNormEps = 1e-6;

// Per-extractor alignment block: FC(in->d), FC(d->d), per-sample
// normalization over the d components with learned scale/shift, then GELU.
template <typename T>
class TransformBlock {
public:
    TransformBlock(const std::string& name, int in_dim, int d)
        : in_dim_(in_dim),
          d_(d),
          w1_(name + ".w1", {d, in_dim}),
          b1_(name + ".b1", {d}),
          w2_(name + ".w2", {d, d}),
          b2_(name + ".b2", {d}),
          scale_(name + ".norm_scale", {d}),
          shift_(name + ".norm_shift", {d}) {
        scale_.value.fill(T(1));
    }

    void init(Rng& rng) {
        init_uniform(w1_.value, in_dim_, rng);
        init_uniform(w2_.value, d_, rng);
    }

    int in_dim() const { return in_dim_; }
    int out_dim() const { return d_; }

    struct Ctx {
        std::vector<T> input;    // in_dim
        std::vector<T> z1;       // d, after first FC
        std::vector<T> z2;       // d, after second FC
        std::vector<T> xhat;     // d, normalized
        std::vector<T> pre_act;  // d, scale*xhat + shift
        T inv_std = T(0);
    };

    std::vector<T> forward(const std::vector<T>& f, Ctx& ctx) const {
        if (static_cast<int>(f.size()) != in_dim_)
            throw std::invalid_argument("transform: feature dim " + std::to_string(f.size()) +
                                        " does not match block input dim " +
                                        std::to_string(in_dim_));
        ctx.input = f;
        ctx.z1.assign(d_, T(0));
        for (int i = 0; i < d_; ++i) {
            T acc = b1_.value[i];
            const T* row = w1_.value.ptr() + static_cast<std::size_t>(i) * in_dim_;
            for (int j = 0; j < in_dim_; ++j) acc += row[j] * f[j];
            ctx.z1[i] = acc;
        }
        ctx.z2.assign(d_, T(0));
        for (int i = 0; i < d_; ++i) {
            T acc = b2_.value[i];
            const T* row = w2_.value.ptr() + static_cast<std::size_t>(i) * d_;
            for (int j = 0; j < d_; ++j) acc += row[j] * ctx.z1[j];
            ctx.z2[i] = acc;
        }
        // population mean/variance over the d components
        T mean = T(0);
        for (int i = 0; i < d_; ++i) mean += ctx.z2[i];
        mean /= T(d_);
        T var = T(0);
        for (int i = 0; i < d_; ++i) var += (ctx.z2[i] - mean) * (ctx.z2[i] - mean);
        var /= T(d_);
        ctx.inv_std = T(1) / std::sqrt(var + T(kLayerNormEps));
        ctx.xhat.assign(d_, T(0));
        ctx.pre_act.assign(d_, T(0));
        std::vector<T> out(d_);
        for (int i = 0; i < d_; ++i) {
            ctx.xhat[i] = (ctx.z2[i] - mean) * ctx.inv_std;
            ctx.pre_act[i] = scale_.value[i] * ctx.xhat[i] + shift_.value[i];
            out[i] = gelu(ctx.pre_act[i]);
        }
        return out;
    }

    void backward(const Ctx& ctx, const std::vector<T>& dout) {
        std::vector<T> dpre(d_);
        for (int i = 0; i < d_; ++i) dpre[i] = dout[i] * gelu_grad(ctx.pre_act[i]);
        std::vector<T> dxhat(d_);
        for (int i = 0; i < d_; ++i) {
            scale_.grad[i] += dpre[i] * ctx.xhat[i];
            shift_.grad[i] += dpre[i];
            dxhat[i] = dpre[i] * scale_.value[i];
        }
        T mean_dxhat = T(0), mean_dxhat_xhat = T(0);
        for (int i = 0; i < d_; ++i) {
            mean_dxhat += dxhat[i];
            mean_dxhat_xhat += dxhat[i] * ctx.xhat[i];
        }
        mean_dxhat /= T(d_);
        mean_dxhat_xhat /= T(d_);
        std::vector<T> dz2(d_);
        for (int i = 0; i < d_; ++i)
            dz2[i] = ctx.inv_std * (dxhat[i] - mean_dxhat - ctx.xhat[i] * mean_dxhat_xhat);
        std::vector<T> dz1(d_, T(0));
        for (int i = 0; i < d_; ++i) {
            b2_.grad[i] += dz2[i];
            T* wrow = w2_.grad.ptr() + static_cast<std::size_t>(i) * d_;
            const T* vrow = w2_.value.ptr() + static_cast<std::size_t>(i) * d_;
            for (int j = 0; j < d_; ++j) {
                wrow[j] += dz2[i] * ctx.z1[j];
                dz1[j] += vrow[j] * dz2[i];
            }
        }
        for (int i = 0; i < d_; ++i) {
            b1_.grad[i] += dz1[i];
            T* wrow = w1_.grad.ptr() + static_cast<std::size_t>(i) * in_dim_;
            for (int j = 0; j < in_dim_; ++j) wrow[j] += dz1[i] * ctx.input[j];
        }
        // inputs are frozen extractor features; no input gradient needed
    }

    void collect(ParamRefs<T>& out) {
        out.push_back(&w1_);
        out.push_back(&b1_);
        out.push_back(&w2_);
        out.push_back(&b2_);
        out.push_back(&scale_);
        out.push_back(&shift_);
    }

private:
    int in_dim_;
    int d_;
    Param<T> w1_, b1_, w2_, b2_, scale_, shift_;
};

// Single FC over the concatenated raw features followed by elementwise
// sigmoid; produces one gating weight per extractor, each in (0, 1).
template <typename T>
class GatingNetwork {
public:
    GatingNetwork(int total_in_dim, int n)
        : total_in_(total_in_dim),
          n_(n),
          weight_("gate.weight", {n, total_in_dim}),
          bias_("gate.bias", {n}) {}

    void init(Rng& rng) { init_uniform(weight_.value, total_in_, rng); }

    int total_in_dim() const { return total_in_; }
    int n() const { return n_; }

    struct Ctx {
        std::vector<T> concat;
        std::vector<T> alpha;
    };

    std::vector<T> forward(const std::vector<std::vector<T>>& features, Ctx& ctx) const {
        ctx.concat.clear();
        for (const auto& f : features) ctx.concat.insert(ctx.concat.end(), f.begin(), f.end());
        if (static_cast<int>(ctx.concat.size()) != total_in_)
            throw std::invalid_argument(
                "gate: concatenated feature length " + std::to_string(ctx.concat.size()) +
                " does not match gate input dim " + std::to_string(total_in_));
        if (static_cast<int>(features.size()) != n_)
            throw std::invalid_argument("gate: expected " + std::to_string(n_) + " features, got " +
                                        std::to_string(features.size()));
        ctx.alpha.assign(n_, T(0));
        for (int i = 0; i < n_; ++i) {
            T acc = bias_.value[i];
            const T* row = weight_.value.ptr() + static_cast<std::size_t>(i) * total_in_;
            for (int j = 0; j < total_in_; ++j) acc += row[j] * ctx.concat[j];
            ctx.alpha[i] = sigmoid(acc);
        }
        return ctx.alpha;
    }

    void backward(const Ctx& ctx, const std::vector<T>& dalpha) {
        for (int i = 0; i < n_; ++i) {
            const T dlogit = dalpha[i] * ctx.alpha[i] * (T(1) - ctx.alpha[i]);
            bias_.grad[i] += dlogit;
            T* wrow = weight_.grad.ptr() + static_cast<std::size_t>(i) * total_in_;
            for (int j = 0; j < total_in_; ++j) wrow[j] += dlogit * ctx.concat[j];
        }
    }

    void collect(ParamRefs<T>& out) {
        out.push_back(&weight_);
        out.push_back(&bias_);
    }

private:
    int total_in_;
    int n_;
    Param<T> weight_, bias_;
};

// Single FC d -> 1.
template <typename T>
class RegressionHead {
public:
    RegressionHead(const std::string& name, int d)
        : d_(d), weight_(name + ".weight", {d}), bias_(name + ".bias", {1}) {}

    void init(Rng& rng) { init_uniform(weight_.value, d_, rng); }

    T forward(const std::vector<T>& g) const {
        if (static_cast<int>(g.size()) != d_)
            throw std::invalid_argument("regression head: input length mismatch");
        T acc = bias_.value[0];
        for (int i = 0; i < d_; ++i) acc += weight_.value[i] * g[i];
        return acc;
    }

    // Accumulates parameter grads and adds the input gradient into dg.
    void backward(const std::vector<T>& g, T dy, std::vector<T>& dg) {
        bias_.grad[0] += dy;
        for (int i = 0; i < d_; ++i) {
            weight_.grad[i] += dy * g[i];
            dg[i] += dy * weight_.value[i];
        }
    }

    void collect(ParamRefs<T>& out) {
        out.push_back(&weight_);
        out.push_back(&bias_);
    }

private:
    int d_;
    Param<T> weight_, bias_;
};

// Weighted sum g = sum_i alpha_i * f'_i. Plain weighted sum; alpha is not
// renormalized.
template <typename T>
std::vector<T> aggregate(const std::vector<std::vector<T>>& transformed,
                         const std::vector<T>& alpha) {
    if (transformed.size() != alpha.size())
        throw std::invalid_argument("aggregate: weight count does not match feature count");
    if (transformed.empty()) throw std::invalid_argument("aggregate: empty feature list");
    const std::size_t d = transformed[0].size();
    std::vector<T> g(d, T(0));
    for (std::size_t i = 0; i < transformed.size(); ++i) {
        if (transformed[i].size() != d)
            throw std::invalid_argument("aggregate: inconsistent transformed lengths");
        for (std::size_t j = 0; j < d; ++j) g[j] += alpha[i] * transformed[i][j];
    }
    return g;
}

// L1 penalty on the gating weights (Eq. of the sparsity constraint); sigmoid
// outputs are positive, so this is just their sum.
template <typename T>
T sparsity_loss(const std::vector<T>& alpha) {
    T acc = T(0);
    for (T a : alpha) acc += std::abs(a);
    return acc;
}

// The full teacher-side module: per-extractor transforms, the gating network
// over raw concatenated features, weighted aggregation, and the teacher
// regression head.
template <typename T>
class Qam {
public:
    Qam(const std::vector<int>& in_dims, int d) : d_(d), gate_(sum(in_dims), n_of(in_dims)), head_("teacher_head", d) {
        blocks_.reserve(in_dims.size());
        for (std::size_t i = 0; i < in_dims.size(); ++i)
            blocks_.emplace_back("transform" + std::to_string(i), in_dims[i], d);
    }

    void init(Rng& rng) {
        for (auto& b : blocks_) b.init(rng);
        gate_.init(rng);
        head_.init(rng);
    }

    int n() const { return static_cast<int>(blocks_.size()); }
    int d() const { return d_; }

    struct Ctx {
        std::vector<typename TransformBlock<T>::Ctx> block_ctx;
        typename GatingNetwork<T>::Ctx gate_ctx;
        std::vector<std::vector<T>> f_prime;
        std::vector<T> alpha;
        std::vector<T> g;
        T y_t = T(0);
    };

    void forward(const std::vector<std::vector<T>>& features, Ctx& ctx) const {
        if (static_cast<int>(features.size()) != n())
            throw std::invalid_argument("qam: expected " + std::to_string(n()) +
                                        " feature vectors, got " +
                                        std::to_string(features.size()));
        ctx.block_ctx.assign(blocks_.size(), {});
        ctx.f_prime.assign(blocks_.size(), {});
        for (std::size_t i = 0; i < blocks_.size(); ++i)
            ctx.f_prime[i] = blocks_[i].forward(features[i], ctx.block_ctx[i]);
        ctx.alpha = gate_.forward(features, ctx.gate_ctx);
        ctx.g = aggregate(ctx.f_prime, ctx.alpha);
        ctx.y_t = head_.forward(ctx.g);
    }

    // dy_t: gradient on the teacher prediction; dg: external gradient on g
    // (the distillation term); dalpha: external gradient on the gating
    // weights (the sparsity term).
    void backward(const Ctx& ctx, T dy_t, std::vector<T> dg, std::vector<T> dalpha) {
        if (dg.empty()) dg.assign(d_, T(0));
        if (dalpha.empty()) dalpha.assign(blocks_.size(), T(0));
        head_.backward(ctx.g, dy_t, dg);
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            T acc = T(0);
            for (int j = 0; j < d_; ++j) acc += dg[j] * ctx.f_prime[i][j];
            dalpha[i] += acc;
        }
        gate_.backward(ctx.gate_ctx, dalpha);
        std::vector<T> df(d_);
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            for (int j = 0; j < d_; ++j) df[j] = ctx.alpha[i] * dg[j];
            blocks_[i].backward(ctx.block_ctx[i], df);
        }
    }

    void collect(ParamRefs<T>& out) {
        for (auto& b : blocks_) b.collect(out);
        gate_.collect(out);
        head_.collect(out);
    }

    TransformBlock<T>& block(int i) { return blocks_[static_cast<std::size_t>(i)]; }
    GatingNetwork<T>& gate() { return gate_; }
    RegressionHead<T>& head() { return head_; }

private:
    static int sum(const std::vector<int>& v) {
        int s = 0;
        for (int x : v) s += x;
        return s;
    }
    static int n_of(const std::vector<int>& v) { return static_cast<int>(v.size()); }

    int d_;
    std::vector<TransformBlock<T>> blocks_;
    GatingNetwork<T> gate_;
    RegressionHead<T> head_;
};

}  // namespace adadqa
