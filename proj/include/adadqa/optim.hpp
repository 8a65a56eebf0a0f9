#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "adadqa/tensor.hpp"

namespace adadqa {

// Linear warmup from 0 to lr_init over warmup_steps, then cosine annealing
// from lr_init to 0 at total_steps.
inline double lr_at(long long step, long long total_steps, long long warmup_steps,
                    double lr_init) {
    if (step < 0 || step > total_steps) throw std::invalid_argument("lr_at: step out of range");
    if (warmup_steps >= total_steps)
        throw std::invalid_argument("lr_at: warmup must end before total_steps");
    if (step < warmup_steps)
        return lr_init * static_cast<double>(step) / static_cast<double>(warmup_steps);
    const double progress = static_cast<double>(step - warmup_steps) /
                            static_cast<double>(total_steps - warmup_steps);
    return lr_init * 0.5 * (1.0 + std::cos(3.14159265358979323846 * progress));
}

// Adaptive-moment optimizer with decoupled weight decay: the decay term is
// applied directly to the parameter, scaled by the learning rate, outside the
// gradient path.
template <typename T>
class AdamW {
public:
    AdamW(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8,
          double weight_decay = 2e-2)
        : beta1_(beta1), beta2_(beta2), eps_(eps), weight_decay_(weight_decay) {}

    void attach(const ParamRefs<T>& params) {
        params_ = params;
        m_.clear();
        v_.clear();
        for (const Param<T>* p : params_) {
            m_.emplace_back(p->value.shape);
            v_.emplace_back(p->value.shape);
        }
        step_count_ = 0;
    }

    void step(double lr) {
        ++step_count_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
        for (std::size_t pi = 0; pi < params_.size(); ++pi) {
            Param<T>& p = *params_[pi];
            Tensor<T>& m = m_[pi];
            Tensor<T>& v = v_[pi];
            for (int i = 0; i < p.value.size(); ++i) {
                const T g = p.grad[static_cast<std::size_t>(i)];
                if (!std::isfinite(static_cast<double>(g)))
                    throw std::runtime_error("non-finite gradient in parameter '" + p.name + "'");
                m[i] = static_cast<T>(beta1_) * m[i] + static_cast<T>(1.0 - beta1_) * g;
                v[i] = static_cast<T>(beta2_) * v[i] + static_cast<T>(1.0 - beta2_) * g * g;
                const double m_hat = static_cast<double>(m[i]) / bc1;
                const double v_hat = static_cast<double>(v[i]) / bc2;
                const double update =
                    m_hat / (std::sqrt(v_hat) + eps_) +
                    weight_decay_ * static_cast<double>(p.value[static_cast<std::size_t>(i)]);
                p.value[static_cast<std::size_t>(i)] =
                    static_cast<T>(static_cast<double>(p.value[static_cast<std::size_t>(i)]) -
                                   lr * update);
            }
        }
    }

    long long step_count() const { return step_count_; }
    void set_step_count(long long s) { step_count_ = s; }
    int param_count() const { return static_cast<int>(params_.size()); }
    Tensor<T>& first_moment(int i) { return m_[static_cast<std::size_t>(i)]; }
    Tensor<T>& second_moment(int i) { return v_[static_cast<std::size_t>(i)]; }
    const Param<T>& param(int i) const { return *params_[static_cast<std::size_t>(i)]; }
    double weight_decay() const { return weight_decay_; }

private:
    double beta1_, beta2_, eps_, weight_decay_;
    ParamRefs<T> params_;
    std::vector<Tensor<T>> m_, v_;
    long long step_count_ = 0;
};

}  // namespace adadqa
