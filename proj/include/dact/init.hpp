#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "dact/tensor.hpp"

namespace dact {

using Rng = std::mt19937_64;

/// Fan-in / fan-out of a weight shape: [out x in] for dense, [F x w x d] for
/// convolution kernels (receptive field times channels).
inline std::pair<std::size_t, std::size_t> fans(const Shape& shape) {
    switch (shape.size()) {
        case 1: return {shape[0], shape[0]};
        case 2: return {shape[1], shape[0]};
        default: return {shape[1] * shape[2], shape[0] * shape[1]};
    }
}

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)).
template <typename T>
Tensor<T> glorot_uniform(const Shape& shape, Rng& rng) {
    auto [fan_in, fan_out] = fans(shape);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Tensor<T> t(shape);
    for (auto& v : t.values()) v = T(dist(rng));
    return t;
}

template <typename T>
Tensor<T> zeros(const Shape& shape) {
    return Tensor<T>(shape);
}

}  // namespace dact
