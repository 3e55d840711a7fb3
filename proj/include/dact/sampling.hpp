#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "dact/corpus.hpp"
#include "dact/error.hpp"
#include "dact/init.hpp"

namespace dact {

/// Largest-remainder apportionment of `n` over `counts`. Remainder ties go to
/// the larger count, then to the lower index.
inline std::vector<std::size_t> largest_remainder_quotas(const std::vector<std::size_t>& counts, std::size_t n) {
    const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
    if (total == 0) {
        if (n == 0) return std::vector<std::size_t>(counts.size(), 0);
        throw ConfigError("cannot apportion a sample over an empty dataset");
    }
    std::vector<std::size_t> quotas(counts.size());
    std::vector<std::size_t> remainder(counts.size());
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        // exact integer arithmetic: n * c = q * total + r
        quotas[i] = n * counts[i] / total;
        remainder[i] = n * counts[i] % total;
        assigned += quotas[i];
    }
    std::vector<std::size_t> order(counts.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
        return counts[a] > counts[b];
    });
    for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++quotas[order[i]];
    return quotas;
}

/// Draws `quotas[l]` turns of each label uniformly without replacement.
/// Returns dataset indices in ascending order.
inline std::vector<std::size_t> sample_with_quotas(const std::vector<Turn>& dataset, const LabelSet& labels,
                                                   const std::vector<std::size_t>& quotas, std::uint64_t seed) {
    if (quotas.size() != labels.size()) throw ConfigError("quota vector does not match the label set");
    std::vector<std::vector<std::size_t>> by_label(labels.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) by_label[labels.index_of(dataset[i].label)].push_back(i);
    Rng rng(seed);
    std::vector<std::size_t> picked;
    for (std::size_t l = 0; l < labels.size(); ++l) {
        auto& pool = by_label[l];
        if (quotas[l] > pool.size()) {
            throw InfeasibleSampleError("label '" + labels.tag(l) + "' needs " + std::to_string(quotas[l]) +
                                        " turns but only " + std::to_string(pool.size()) + " are available");
        }
        // partial Fisher-Yates
        for (std::size_t i = 0; i < quotas[l]; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
            std::swap(pool[i], pool[pick(rng)]);
            picked.push_back(pool[i]);
        }
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

/// Stratified subset of `n` turns preserving the empirical label distribution.
inline std::vector<std::size_t> stratified_sample(const std::vector<Turn>& dataset, const LabelSet& labels,
                                                  std::size_t n, std::uint64_t seed) {
    if (n > dataset.size()) {
        throw ConfigError("sample size " + std::to_string(n) + " exceeds dataset size " + std::to_string(dataset.size()));
    }
    return sample_with_quotas(dataset, labels, largest_remainder_quotas(label_counts(dataset, labels), n), seed);
}

inline std::vector<Turn> select(const std::vector<Turn>& dataset, const std::vector<std::size_t>& indices) {
    std::vector<Turn> out;
    out.reserve(indices.size());
    for (auto i : indices) out.push_back(dataset.at(i));
    return out;
}

/// Shuffled partition of 0..n-1 into k folds whose sizes differ by at most one.
inline std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("k-fold split needs k >= 2, got " + std::to_string(k));
    if (k > n) throw ConfigError("k-fold split: k = " + std::to_string(k) + " exceeds " + std::to_string(n) + " items");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<std::vector<std::size_t>> folds(k);
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t size = n / k + (f < n % k ? 1 : 0);
        folds[f].assign(idx.begin() + pos, idx.begin() + pos + size);
        std::sort(folds[f].begin(), folds[f].end());
        pos += size;
    }
    return folds;
}

}  // namespace dact
