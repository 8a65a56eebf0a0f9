#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "adadqa/core.hpp"

namespace adadqa {

// Smooth-L1 regression loss: 0.5 r^2 inside |r| < 1, |r| - 0.5 outside.
// Shared by the teacher and student regression terms.
template <typename T>
T smooth_l1(T y, T y_hat) {
    const T r = y - y_hat;
    const T a = std::abs(r);
    return a < T(1) ? T(0.5) * r * r : a - T(0.5);
}

// d smooth_l1 / d y_hat.
template <typename T>
T smooth_l1_grad(T y, T y_hat) {
    const T r = y - y_hat;
    if (std::abs(r) < T(1)) return -r;
    return r > T(0) ? T(-1) : T(1);
}

namespace detail {

template <typename T>
std::vector<T> softmax(const std::vector<T>& v) {
    const T mx = *std::max_element(v.begin(), v.end());
    std::vector<T> p(v.size());
    T sum = T(0);
    for (std::size_t i = 0; i < v.size(); ++i) {
        p[i] = std::exp(v[i] - mx);
        sum += p[i];
    }
    for (auto& x : p) x /= sum;
    return p;
}

}  // namespace detail

// Distillation distance between the teacher representation g and the student
// representation h. L2 is the Euclidean norm itself (not squared); JS maps
// both vectors onto the simplex via softmax first (natural-log convention).
template <typename T>
T kd_loss(const std::vector<T>& g, const std::vector<T>& h, DistillLossKind kind) {
    if (g.size() != h.size()) throw std::invalid_argument("kd_loss: length mismatch");
    if (g.empty()) throw std::invalid_argument("kd_loss: empty vectors");
    switch (kind) {
        case DistillLossKind::kL2: {
            T acc = T(0);
            for (std::size_t i = 0; i < g.size(); ++i) acc += (g[i] - h[i]) * (g[i] - h[i]);
            return std::sqrt(acc);
        }
        case DistillLossKind::kL1: {
            T acc = T(0);
            for (std::size_t i = 0; i < g.size(); ++i) acc += std::abs(g[i] - h[i]);
            return acc;
        }
        case DistillLossKind::kJs: {
            const std::vector<T> p = detail::softmax(g);
            const std::vector<T> q = detail::softmax(h);
            T acc = T(0);
            for (std::size_t i = 0; i < p.size(); ++i) {
                const T m = T(0.5) * (p[i] + q[i]);
                acc += T(0.5) * (p[i] * std::log(p[i] / m) + q[i] * std::log(q[i] / m));
            }
            return acc;
        }
    }
    throw std::logic_error("unreachable");
}

// Gradients of kd_loss with respect to g and h, accumulated into dg/dh after
// scaling by `upstream`. The L2 norm takes a zero subgradient at g = h.
template <typename T>
void kd_loss_backward(const std::vector<T>& g, const std::vector<T>& h, DistillLossKind kind,
                      T upstream, std::vector<T>& dg, std::vector<T>& dh) {
    if (g.size() != h.size()) throw std::invalid_argument("kd_loss: length mismatch");
    dg.resize(g.size(), T(0));
    dh.resize(h.size(), T(0));
    switch (kind) {
        case DistillLossKind::kL2: {
            T norm = T(0);
            for (std::size_t i = 0; i < g.size(); ++i) norm += (g[i] - h[i]) * (g[i] - h[i]);
            norm = std::sqrt(norm);
            if (norm == T(0)) return;
            for (std::size_t i = 0; i < g.size(); ++i) {
                const T d = upstream * (g[i] - h[i]) / norm;
                dg[i] += d;
                dh[i] -= d;
            }
            return;
        }
        case DistillLossKind::kL1: {
            for (std::size_t i = 0; i < g.size(); ++i) {
                const T r = g[i] - h[i];
                const T s = r > T(0) ? T(1) : (r < T(0) ? T(-1) : T(0));
                dg[i] += upstream * s;
                dh[i] -= upstream * s;
            }
            return;
        }
        case DistillLossKind::kJs: {
            const std::vector<T> p = detail::softmax(g);
            const std::vector<T> q = detail::softmax(h);
            std::vector<T> dp(p.size()), dq(q.size());
            for (std::size_t i = 0; i < p.size(); ++i) {
                const T m = T(0.5) * (p[i] + q[i]);
                dp[i] = T(0.5) * std::log(p[i] / m);
                dq[i] = T(0.5) * std::log(q[i] / m);
            }
            // backprop through softmax: dx_i = p_i (dp_i - sum_j dp_j p_j)
            T dot_p = T(0), dot_q = T(0);
            for (std::size_t i = 0; i < p.size(); ++i) {
                dot_p += dp[i] * p[i];
                dot_q += dq[i] * q[i];
            }
            for (std::size_t i = 0; i < p.size(); ++i) {
                dg[i] += upstream * p[i] * (dp[i] - dot_p);
                dh[i] += upstream * q[i] * (dq[i] - dot_q);
            }
            return;
        }
    }
    throw std::logic_error("unreachable");
}

struct LossBreakdown {
    double reg_s = 0.0;
    double reg_t = 0.0;
    double kd = 0.0;
    double sparse = 0.0;
    double total = 0.0;
};

// Combined objective: total = reg_s + gamma * (reg_t + kd) + lambda * sparse.
inline LossBreakdown total_loss(double reg_s, double reg_t, double kd, double sparse,
                                double gamma, double lambda) {
    for (double v : {reg_s, reg_t, kd, sparse}) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::invalid_argument("total_loss: components must be finite and >= 0");
    }
    LossBreakdown b;
    b.reg_s = reg_s;
    b.reg_t = reg_t;
    b.kd = kd;
    b.sparse = sparse;
    b.total = reg_s + gamma * (reg_t + kd) + lambda * sparse;
    return b;
}

}  // namespace adadqa
