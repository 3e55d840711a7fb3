#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "dact/sampling.hpp"
#include "table_distributions.hpp"

using namespace dact;
using namespace dact::testing;

namespace {

std::vector<Turn> labeled(const std::vector<std::string>& tags) {
    std::vector<Turn> out;
    for (std::size_t i = 0; i < tags.size(); ++i) out.push_back({"d", i, "s", tags[i], "t", std::nullopt});
    return out;
}

std::map<std::string, std::size_t> tally(const std::vector<Turn>& turns) {
    std::map<std::string, std::size_t> m;
    for (const auto& t : turns) ++m[t.label];
    return m;
}

}  // namespace

TEST(LargestRemainder, GermanDistributionAtOneHundred) {
    const auto turns = corpus_with_distribution(german_distribution(), 1000);
    const auto labels = labels_of(german_distribution());
    const auto quotas = largest_remainder_quotas(label_counts(turns, labels), 100);
    EXPECT_EQ(quotas[labels.index_of("FEEDBACK")], 28u);
    EXPECT_EQ(quotas[labels.index_of("SUGGEST")], 19u);
    EXPECT_EQ(quotas[labels.index_of("INFORM")], 18u);
    EXPECT_EQ(quotas[labels.index_of("REQUEST")], 9u);
    EXPECT_EQ(std::accumulate(quotas.begin(), quotas.end(), std::size_t{0}), 100u);
}

TEST(LargestRemainder, HandApportionment) {
    // 7 over {5, 3, 2}: exact shares 3.5, 2.1, 1.4 -> floors 3, 2, 1; one
    // leftover seat goes to the largest remainder (0.5).
    EXPECT_EQ(largest_remainder_quotas({5, 3, 2}, 7), (std::vector<std::size_t>{4, 2, 1}));
    // Equal remainders: the larger count wins.
    EXPECT_EQ(largest_remainder_quotas({1, 3}, 2), (std::vector<std::size_t>{0, 2}));
    EXPECT_EQ(largest_remainder_quotas({2, 2}, 1), (std::vector<std::size_t>{1, 0}));
}

TEST(LargestRemainder, PropertyHolds) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<std::size_t> counts(1 + rng() % 12);
        std::size_t total = 0;
        for (auto& c : counts) total += (c = rng() % 50);
        if (total == 0) continue;
        const std::size_t n = rng() % (total + 1);
        const auto q = largest_remainder_quotas(counts, n);
        EXPECT_EQ(std::accumulate(q.begin(), q.end(), std::size_t{0}), n);
        for (std::size_t i = 0; i < counts.size(); ++i) {
            const double exact = static_cast<double>(n) * counts[i] / total;
            EXPECT_LT(std::abs(static_cast<double>(q[i]) - exact), 1.0);
            EXPECT_LE(q[i], counts[i]);
        }
    }
}

TEST(StratifiedSample, GermanDistributionCounts) {
    // 9 599 turns does not divide evenly; quotas must still come out exact.
    for (std::size_t size : {1000u, 9599u}) {
        const auto turns = corpus_with_distribution(german_distribution(), size);
        const auto labels = labels_of(german_distribution());
        auto sample = select(turns, stratified_sample(turns, labels, 100, 42));
        auto m = tally(sample);
        EXPECT_EQ(sample.size(), 100u);
        EXPECT_EQ(m["FEEDBACK"], 28u);
        EXPECT_EQ(m["SUGGEST"], 19u);
        EXPECT_EQ(m["INFORM"], 18u);
        EXPECT_EQ(m["REQUEST"], 9u);
    }
}

TEST(StratifiedSample, WholeDatasetAndSingleLabel) {
    const auto turns = labeled({"A", "B", "A", "C", "B", "A"});
    LabelSet labels({"A", "B", "C"});
    auto all = stratified_sample(turns, labels, turns.size(), 3);
    EXPECT_EQ(all, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));

    const auto single = labeled({"X", "X", "X", "X", "X", "X", "X"});
    auto five = select(single, stratified_sample(single, LabelSet({"X"}), 5, 3));
    EXPECT_EQ(five.size(), 5u);
    for (const auto& t : five) EXPECT_EQ(t.label, "X");
}

TEST(StratifiedSample, DeterministicPerSeedAndWithoutReplacement) {
    const auto turns = corpus_with_distribution(german_distribution(), 500);
    const auto labels = labels_of(german_distribution());
    auto a = stratified_sample(turns, labels, 100, 7);
    auto b = stratified_sample(turns, labels, 100, 7);
    auto c = stratified_sample(turns, labels, 100, 8);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
    EXPECT_EQ(std::set<std::size_t>(a.begin(), a.end()).size(), a.size());
}

TEST(StratifiedSample, Errors) {
    const auto turns = labeled({"A", "B"});
    LabelSet labels({"A", "B"});
    EXPECT_THROW(stratified_sample(turns, labels, 3, 1), ConfigError);
    EXPECT_THROW(sample_with_quotas(turns, labels, {2, 0}, 1), InfeasibleSampleError);
}

TEST(KFold, FourHundredSeventyIntoTen) {
    auto folds = kfold_split(470, 10, 1);
    ASSERT_EQ(folds.size(), 10u);
    std::vector<int> seen(470, 0);
    for (const auto& f : folds) {
        EXPECT_EQ(f.size(), 47u);
        for (auto i : f) ++seen[i];
    }
    for (int s : seen) EXPECT_EQ(s, 1);
}

TEST(KFold, LeaveOneOut) {
    auto folds = kfold_split(10, 10, 5);
    std::set<std::size_t> all;
    for (const auto& f : folds) {
        ASSERT_EQ(f.size(), 1u);
        all.insert(f[0]);
    }
    EXPECT_EQ(all.size(), 10u);
}

TEST(KFold, PartitionProperty) {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng() % 200, k = 2 + rng() % (n - 1);
        auto folds = kfold_split(n, k, rng());
        std::vector<int> seen(n, 0);
        std::size_t lo = n, hi = 0;
        for (const auto& f : folds) {
            lo = std::min(lo, f.size());
            hi = std::max(hi, f.size());
            for (auto i : f) ++seen[i];
        }
        EXPECT_LE(hi - lo, 1u);
        EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
    }
}

TEST(KFold, DeterministicAndErrors) {
    EXPECT_EQ(kfold_split(50, 5, 9), kfold_split(50, 5, 9));
    EXPECT_THROW(kfold_split(5, 6, 1), ConfigError);
    EXPECT_THROW(kfold_split(5, 1, 1), ConfigError);
}
