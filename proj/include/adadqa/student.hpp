#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "adadqa/core.hpp"
#include "adadqa/qam.hpp"
#include "adadqa/rng.hpp"
#include "adadqa/tensor.hpp"

namespace adadqa {

// Channel-major activation volume for the 3-d conv stages.
template <typename T>
struct Volume {
    int c = 0, t = 0, h = 0, w = 0;
    std::vector<T> data;

    void resize(int c_, int t_, int h_, int w_) {
        c = c_;
        t = t_;
        h = h_;
        w = w_;
        data.assign(static_cast<std::size_t>(c) * t * h * w, T(0));
    }
    std::size_t idx(int ci, int ti, int yi, int xi) const {
        return ((static_cast<std::size_t>(ci) * t + ti) * h + yi) * w + xi;
    }
    T& at(int ci, int ti, int yi, int xi) { return data[idx(ci, ti, yi, xi)]; }
    T at(int ci, int ti, int yi, int xi) const { return data[idx(ci, ti, yi, xi)]; }
};

// 3x3x3 convolution with padding 1 and a per-stage stride.
template <typename T>
class Conv3d {
public:
    Conv3d(const std::string& name, int in_ch, int out_ch, std::array<int, 3> stride)
        : in_ch_(in_ch),
          out_ch_(out_ch),
          stride_(stride),
          weight_(name + ".weight", {out_ch, in_ch, 3, 3, 3}),
          bias_(name + ".bias", {out_ch}) {}

    void init(Rng& rng) { init_uniform(weight_.value, in_ch_ * 27, rng); }

    static int out_extent(int in, int stride) { return (in - 1) / stride + 1; }

    void forward(const Volume<T>& in, Volume<T>& out) const {
        const int ot = out_extent(in.t, stride_[0]);
        const int oh = out_extent(in.h, stride_[1]);
        const int ow = out_extent(in.w, stride_[2]);
        out.resize(out_ch_, ot, oh, ow);
        for (int oc = 0; oc < out_ch_; ++oc) {
            T* oplane = out.data.data() + out.idx(oc, 0, 0, 0);
            const T b = bias_.value[oc];
            for (std::size_t i = 0; i < static_cast<std::size_t>(ot) * oh * ow; ++i) oplane[i] = b;
            for (int ic = 0; ic < in_ch_; ++ic)
                for (int kt = 0; kt < 3; ++kt)
                    for (int ky = 0; ky < 3; ++ky)
                        for (int kx = 0; kx < 3; ++kx) {
                            const T wv =
                                weight_.value[((((static_cast<std::size_t>(oc) * in_ch_ + ic) * 3 +
                                                 kt) *
                                                    3 +
                                                ky) *
                                                   3 +
                                               kx)];
                            if (wv == T(0)) continue;
                            int tlo, thi, ylo, yhi, xlo, xhi;
                            valid_range(kt, in.t, stride_[0], ot, tlo, thi);
                            valid_range(ky, in.h, stride_[1], oh, ylo, yhi);
                            valid_range(kx, in.w, stride_[2], ow, xlo, xhi);
                            for (int to = tlo; to <= thi; ++to) {
                                const int ti = to * stride_[0] + kt - 1;
                                for (int yo = ylo; yo <= yhi; ++yo) {
                                    const int yi = yo * stride_[1] + ky - 1;
                                    const T* irow = in.data.data() + in.idx(ic, ti, yi, 0);
                                    T* orow = out.data.data() + out.idx(oc, to, yo, 0);
                                    for (int xo = xlo; xo <= xhi; ++xo)
                                        orow[xo] += wv * irow[xo * stride_[2] + kx - 1];
                                }
                            }
                        }
        }
    }

    // Accumulates weight/bias grads; fills din when requested.
    void backward(const Volume<T>& in, const Volume<T>& dout, Volume<T>* din) {
        if (din) din->resize(in.c, in.t, in.h, in.w);
        for (int oc = 0; oc < out_ch_; ++oc) {
            const T* dplane = dout.data.data() + dout.idx(oc, 0, 0, 0);
            T bacc = T(0);
            for (std::size_t i = 0; i < static_cast<std::size_t>(dout.t) * dout.h * dout.w; ++i)
                bacc += dplane[i];
            bias_.grad[oc] += bacc;
            for (int ic = 0; ic < in_ch_; ++ic)
                for (int kt = 0; kt < 3; ++kt)
                    for (int ky = 0; ky < 3; ++ky)
                        for (int kx = 0; kx < 3; ++kx) {
                            const std::size_t widx =
                                ((((static_cast<std::size_t>(oc) * in_ch_ + ic) * 3 + kt) * 3 +
                                  ky) *
                                     3 +
                                 kx);
                            const T wv = weight_.value[widx];
                            T wacc = T(0);
                            int tlo, thi, ylo, yhi, xlo, xhi;
                            valid_range(kt, in.t, stride_[0], dout.t, tlo, thi);
                            valid_range(ky, in.h, stride_[1], dout.h, ylo, yhi);
                            valid_range(kx, in.w, stride_[2], dout.w, xlo, xhi);
                            for (int to = tlo; to <= thi; ++to) {
                                const int ti = to * stride_[0] + kt - 1;
                                for (int yo = ylo; yo <= yhi; ++yo) {
                                    const int yi = yo * stride_[1] + ky - 1;
                                    const T* irow = in.data.data() + in.idx(ic, ti, yi, 0);
                                    const T* drow = dout.data.data() + dout.idx(oc, to, yo, 0);
                                    if (din) {
                                        T* grow = din->data.data() + din->idx(ic, ti, yi, 0);
                                        for (int xo = xlo; xo <= xhi; ++xo) {
                                            const int xi = xo * stride_[2] + kx - 1;
                                            wacc += drow[xo] * irow[xi];
                                            grow[xi] += wv * drow[xo];
                                        }
                                    } else {
                                        for (int xo = xlo; xo <= xhi; ++xo)
                                            wacc += drow[xo] * irow[xo * stride_[2] + kx - 1];
                                    }
                                }
                            }
                            weight_.grad[widx] += wacc;
                        }
        }
    }

    void collect(ParamRefs<T>& out) {
        out.push_back(&weight_);
        out.push_back(&bias_);
    }

    int out_ch() const { return out_ch_; }

private:
    // output indices o with in-bounds input index o*stride + k - 1
    static void valid_range(int k, int in_extent, int stride, int out_extent_, int& lo, int& hi) {
        lo = 0;
        while (lo * stride + k - 1 < 0) ++lo;
        hi = out_extent_ - 1;
        while (hi >= lo && hi * stride + k - 1 >= in_extent) --hi;
    }

    int in_ch_;
    int out_ch_;
    std::array<int, 3> stride_;
    Param<T> weight_, bias_;
};

// Normalization across channels at each (t, y, x) position with learned
// per-channel scale and shift.
template <typename T>
class ChannelNorm {
public:
    ChannelNorm(const std::string& name, int channels)
        : c_(channels), scale_(name + ".norm_scale", {channels}),
          shift_(name + ".norm_shift", {channels}) {
        scale_.value.fill(T(1));
    }

    struct Ctx {
        Volume<T> xhat;
        std::vector<T> inv_std;  // per position
    };

    void forward(const Volume<T>& z, Volume<T>& out, Ctx& ctx) const {
        out.resize(z.c, z.t, z.h, z.w);
        ctx.xhat.resize(z.c, z.t, z.h, z.w);
        const std::size_t plane = static_cast<std::size_t>(z.t) * z.h * z.w;
        ctx.inv_std.assign(plane, T(0));
        for (std::size_t p = 0; p < plane; ++p) {
            T mean = T(0);
            for (int c = 0; c < c_; ++c) mean += z.data[static_cast<std::size_t>(c) * plane + p];
            mean /= T(c_);
            T var = T(0);
            for (int c = 0; c < c_; ++c) {
                const T d = z.data[static_cast<std::size_t>(c) * plane + p] - mean;
                var += d * d;
            }
            var /= T(c_);
            const T inv = T(1) / std::sqrt(var + T(kLayerNormEps));
            ctx.inv_std[p] = inv;
            for (int c = 0; c < c_; ++c) {
                const std::size_t i = static_cast<std::size_t>(c) * plane + p;
                const T xh = (z.data[i] - mean) * inv;
                ctx.xhat.data[i] = xh;
                out.data[i] = scale_.value[c] * xh + shift_.value[c];
            }
        }
    }

    void backward(const Ctx& ctx, const Volume<T>& dout, Volume<T>& dz) {
        dz.resize(ctx.xhat.c, ctx.xhat.t, ctx.xhat.h, ctx.xhat.w);
        const std::size_t plane =
            static_cast<std::size_t>(ctx.xhat.t) * ctx.xhat.h * ctx.xhat.w;
        for (std::size_t p = 0; p < plane; ++p) {
            T mean_dx = T(0), mean_dx_xh = T(0);
            for (int c = 0; c < c_; ++c) {
                const std::size_t i = static_cast<std::size_t>(c) * plane + p;
                const T dpre = dout.data[i];
                scale_.grad[c] += dpre * ctx.xhat.data[i];
                shift_.grad[c] += dpre;
                const T dxh = dpre * scale_.value[c];
                mean_dx += dxh;
                mean_dx_xh += dxh * ctx.xhat.data[i];
            }
            mean_dx /= T(c_);
            mean_dx_xh /= T(c_);
            for (int c = 0; c < c_; ++c) {
                const std::size_t i = static_cast<std::size_t>(c) * plane + p;
                const T dxh = dout.data[i] * scale_.value[c];
                dz.data[i] =
                    ctx.inv_std[p] * (dxh - mean_dx - ctx.xhat.data[i] * mean_dx_xh);
            }
        }
    }

    void collect(ParamRefs<T>& out) {
        out.push_back(&scale_);
        out.push_back(&shift_);
    }

private:
    int c_;
    Param<T> scale_, shift_;
};

struct StudentConfig {
    int frame_count = 8;
    int crop_size = 56;
    bool channel_norm = true;
    std::vector<int> channels = {12, 24, 48, 32};  // last entry is d
    std::vector<std::array<int, 3>> strides = {
        {1, 2, 2}, {1, 2, 2}, {2, 2, 2}, {2, 2, 2}};

    int d() const { return channels.back(); }

    static StudentConfig make_default(int d, int frame_count, int crop_size) {
        StudentConfig cfg;
        cfg.frame_count = frame_count;
        cfg.crop_size = crop_size;
        cfg.channels = {12, 24, 48, d};
        return cfg;
    }

    // Two-stage variant small enough for finite-difference checks.
    static StudentConfig make_tiny(int d, int frame_count = 4, int crop_size = 16) {
        StudentConfig cfg;
        cfg.frame_count = frame_count;
        cfg.crop_size = crop_size;
        cfg.channels = {3, d};
        cfg.strides = {{1, 2, 2}, {2, 2, 2}};
        return cfg;
    }
};

// Lightweight trainable video backbone: stacked strided 3-d convolutions
// with GELU, global average pooling to the aligned dimension d, and a single
// FC regression head producing the student score.
template <typename T>
class StudentModel {
public:
    explicit StudentModel(StudentConfig cfg) : cfg_(std::move(cfg)), head_("student_head", cfg_.d()) {
        if (cfg_.channels.size() != cfg_.strides.size())
            throw std::invalid_argument("student: channels/strides size mismatch");
        int in_ch = kChannels;
        for (std::size_t i = 0; i < cfg_.channels.size(); ++i) {
            stages_.emplace_back("student.stage" + std::to_string(i), in_ch, cfg_.channels[i],
                                 cfg_.strides[i]);
            if (cfg_.channel_norm)
                norms_.emplace_back("student.stage" + std::to_string(i), cfg_.channels[i]);
            in_ch = cfg_.channels[i];
        }
    }

    void init(Rng& rng) {
        for (auto& s : stages_) s.init(rng);
        head_.init(rng);
    }

    const StudentConfig& config() const { return cfg_; }
    int d() const { return cfg_.d(); }

    struct Ctx {
        std::vector<Volume<T>> conv_out;  // per stage, before normalization
        std::vector<Volume<T>> pre_act;   // per stage, before GELU
        std::vector<Volume<T>> post_act;  // per stage, after GELU
        std::vector<typename ChannelNorm<T>::Ctx> norm_ctx;
        Volume<T> input;
        std::vector<T> h;
    };

    // Deterministic forward; returns (h, y_s).
    std::pair<std::vector<T>, T> forward(const VideoClip& clip, Ctx& ctx) const {
        check_geometry(clip);
        to_volume(clip, ctx.input);
        ctx.conv_out.assign(stages_.size(), {});
        ctx.pre_act.assign(stages_.size(), {});
        ctx.post_act.assign(stages_.size(), {});
        ctx.norm_ctx.assign(norms_.size(), {});
        const Volume<T>* cur = &ctx.input;
        for (std::size_t i = 0; i < stages_.size(); ++i) {
            if (cfg_.channel_norm) {
                stages_[i].forward(*cur, ctx.conv_out[i]);
                norms_[i].forward(ctx.conv_out[i], ctx.pre_act[i], ctx.norm_ctx[i]);
            } else {
                stages_[i].forward(*cur, ctx.pre_act[i]);
            }
            gelu_volume(ctx.pre_act[i], ctx.post_act[i]);
            cur = &ctx.post_act[i];
        }
        const Volume<T>& last = *cur;
        const T inv = T(1) / static_cast<T>(static_cast<std::size_t>(last.t) * last.h * last.w);
        ctx.h.assign(static_cast<std::size_t>(last.c), T(0));
        for (int c = 0; c < last.c; ++c) {
            T acc = T(0);
            const T* plane = last.data.data() + last.idx(c, 0, 0, 0);
            for (std::size_t i = 0; i < static_cast<std::size_t>(last.t) * last.h * last.w; ++i)
                acc += plane[i];
            ctx.h[static_cast<std::size_t>(c)] = acc * inv;
        }
        return {ctx.h, head_.forward(ctx.h)};
    }

    std::pair<std::vector<T>, T> forward(const VideoClip& clip) const {
        Ctx ctx;
        return forward(clip, ctx);
    }

    // dh: gradient on the pooled representation (distillation path);
    // dy_s: gradient on the student prediction.
    void backward(const Ctx& ctx, std::vector<T> dh, T dy_s) {
        if (dh.empty()) dh.assign(ctx.h.size(), T(0));
        head_.backward(ctx.h, dy_s, dh);
        const Volume<T>& last = ctx.post_act.back();
        Volume<T> dcur;
        dcur.resize(last.c, last.t, last.h, last.w);
        const T inv = T(1) / static_cast<T>(static_cast<std::size_t>(last.t) * last.h * last.w);
        for (int c = 0; c < last.c; ++c) {
            T* plane = dcur.data.data() + dcur.idx(c, 0, 0, 0);
            const T v = dh[static_cast<std::size_t>(c)] * inv;
            for (std::size_t i = 0; i < static_cast<std::size_t>(last.t) * last.h * last.w; ++i)
                plane[i] = v;
        }
        for (int i = static_cast<int>(stages_.size()) - 1; i >= 0; --i) {
            // through GELU
            const Volume<T>& z = ctx.pre_act[static_cast<std::size_t>(i)];
            Volume<T> dz;
            dz.resize(z.c, z.t, z.h, z.w);
            for (std::size_t j = 0; j < z.data.size(); ++j)
                dz.data[j] = dcur.data[j] * gelu_grad(z.data[j]);
            if (cfg_.channel_norm) {
                Volume<T> dconv;
                norms_[static_cast<std::size_t>(i)].backward(
                    ctx.norm_ctx[static_cast<std::size_t>(i)], dz, dconv);
                dz = std::move(dconv);
            }
            const Volume<T>& in =
                i == 0 ? ctx.input : ctx.post_act[static_cast<std::size_t>(i - 1)];
            if (i == 0) {
                stages_[0].backward(in, dz, nullptr);
            } else {
                Volume<T> din;
                stages_[static_cast<std::size_t>(i)].backward(in, dz, &din);
                dcur = std::move(din);
            }
        }
    }

    void collect(ParamRefs<T>& out) {
        for (std::size_t i = 0; i < stages_.size(); ++i) {
            stages_[i].collect(out);
            if (cfg_.channel_norm) norms_[i].collect(out);
        }
        head_.collect(out);
    }

    RegressionHead<T>& head() { return head_; }

private:
    void check_geometry(const VideoClip& clip) const {
        if (clip.t != cfg_.frame_count || clip.h != cfg_.crop_size || clip.w != cfg_.crop_size)
            throw std::invalid_argument(
                "student: clip geometry " + std::to_string(clip.t) + "x" +
                std::to_string(clip.h) + "x" + std::to_string(clip.w) + " does not match " +
                std::to_string(cfg_.frame_count) + "x" + std::to_string(cfg_.crop_size) + "x" +
                std::to_string(cfg_.crop_size));
    }

    // Pixels enter centered at zero.
    void to_volume(const VideoClip& clip, Volume<T>& out) const {
        out.resize(kChannels, clip.t, clip.h, clip.w);
        for (int c = 0; c < kChannels; ++c)
            for (int ti = 0; ti < clip.t; ++ti)
                for (int y = 0; y < clip.h; ++y)
                    for (int x = 0; x < clip.w; ++x)
                        out.at(c, ti, y, x) = static_cast<T>(clip.at(ti, y, x, c)) - T(0.5);
    }

    static void gelu_volume(const Volume<T>& z, Volume<T>& a) {
        a.resize(z.c, z.t, z.h, z.w);
        for (std::size_t i = 0; i < z.data.size(); ++i) a.data[i] = gelu(z.data[i]);
    }

    StudentConfig cfg_;
    std::vector<Conv3d<T>> stages_;
    std::vector<ChannelNorm<T>> norms_;
    RegressionHead<T> head_;
};

}  // namespace adadqa
