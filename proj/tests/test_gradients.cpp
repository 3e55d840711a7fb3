#include <gtest/gtest.h>

#include "gradient_cases.hpp"

using namespace dact;
namespace cases = dact::testing::gradient_cases;

namespace {

constexpr double kTolerance = 1e-4;

}  // namespace

class GradientCheck : public ::testing::TestWithParam<cases::Family> {};

TEST_P(GradientCheck, MatchesCentralDifferences) {
    int n = 0;
    GetParam().run([&](const dact::testing::GradCheckResult& r) {
        ++n;
        EXPECT_GT(r.checked, 0u);
        EXPECT_LT(r.worst_relative_error, kTolerance) << "case " << n << ", worst tensor: " << r.worst_param;
    });
    EXPECT_GE(n, 20);
}

INSTANTIATE_TEST_SUITE_P(AllFamilies, GradientCheck, ::testing::ValuesIn(cases::families()),
                         [](const auto& info) { return std::string(info.param.name); });

TEST(GradientTape, PadRowIsHeldConstant) {
    std::mt19937_64 rng(5);
    ParamStore<double> s;
    s.add("table", cases::gaussian({4, 3}, rng));
    const std::vector<std::int32_t> ids = {0, 2, 0, 3};
    Graph<double> g(&s);
    g.backward(cases::weighted_sum(g, nn::embedding(g, g.param("table"), std::span<const std::int32_t>(ids)),
                                   Tensor<double>({4, 3}, 1.0)));
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(s.get("table").grad.at(0, j), 0.0);
    EXPECT_EQ(s.get("table").grad.at(2, 0), 1.0);
}
