#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "adadqa/tensor.hpp"

namespace gradcheck {

// Central finite difference of a scalar function with respect to one
// parameter component, perturbed in place.
template <typename F>
double central_diff(F&& f, double& x, double step = 1e-5) {
    const double saved = x;
    x = saved + step;
    const double up = f();
    x = saved - step;
    const double down = f();
    x = saved;
    return (up - down) / (2.0 * step);
}

inline bool grad_close(double analytic, double numeric, double rel_tol = 1e-4,
                       double abs_tol = 1e-9) {
    const double diff = std::abs(analytic - numeric);
    if (diff < abs_tol) return true;
    return diff / std::max(1e-12, std::abs(analytic) + std::abs(numeric)) < rel_tol;
}

// Checks every component of every parameter against central differences of
// `loss`; the caller's loss() must re-run the forward pass. Gradients must
// already be accumulated in the params. Returns the worst offender count.
template <typename F>
int check_params(const adadqa::ParamRefs<double>& params, F&& loss, double rel_tol = 1e-4,
                 double step = 1e-5) {
    int bad = 0;
    for (adadqa::Param<double>* p : params) {
        for (int i = 0; i < p->value.size(); ++i) {
            const double numeric =
                central_diff(loss, p->value[static_cast<std::size_t>(i)], step);
            const double analytic = p->grad[static_cast<std::size_t>(i)];
            if (!grad_close(analytic, numeric, rel_tol)) ++bad;
        }
    }
    return bad;
}

}  // namespace gradcheck
