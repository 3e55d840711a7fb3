#pragma once

#include <cmath>

#include "dact/error.hpp"
#include "dact/param_store.hpp"

namespace dact {

struct AdamOptions {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// One bias-corrected Adam update over every trainable entry. Gradients are
/// left in place; the caller zeroes them.
template <typename T>
void adam_step(ParamStore<T>& store, double lr, const AdamOptions& opt = {}) {
    if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
    for (auto& p : store.entries()) {
        if (!p.trainable) continue;
        ++p.step;
        const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(p.step));
        const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(p.step));
        auto* w = p.value.data();
        const auto* g = p.grad.data();
        auto* m = p.first_moment.data();
        auto* v = p.second_moment.data();
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            m[i] = T(opt.beta1 * m[i] + (1.0 - opt.beta1) * g[i]);
            v[i] = T(opt.beta2 * v[i] + (1.0 - opt.beta2) * double(g[i]) * g[i]);
            const double m_hat = m[i] / c1;
            const double v_hat = v[i] / c2;
            w[i] = T(w[i] - lr * m_hat / (std::sqrt(v_hat) + opt.epsilon));
        }
    }
}

}  // namespace dact
