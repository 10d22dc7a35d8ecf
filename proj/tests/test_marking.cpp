#include "afem/marking.hpp"

#include "afem/common.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace afem;

namespace {

double sum_over(const std::vector<double>& eta, const std::vector<int>& ids)
{
    double s = 0.0;
    for (int i : ids) s += eta[i];
    return s;
}

std::vector<double> random_field(std::mt19937_64& rng)
{
    const int n = 1 + static_cast<int>(rng() % 200);
    std::vector<double> eta(n);
    std::exponential_distribution<double> e(1.0);
    std::bernoulli_distribution tie(0.2);
    for (double& v : eta) v = e(rng);
    // Some exact ties.
    for (int i = 1; i < n; ++i)
        if (tie(rng)) eta[i] = eta[i - 1];
    return eta;
}

} // namespace

TEST(Dorfler, Examples)
{
    const std::vector<double> eta{4, 3, 2, 1};
    auto r = dorfler_mark(eta, 0.5);
    EXPECT_EQ(r.marked, (std::vector<int>{0, 1}));
    EXPECT_NEAR(r.achieved_fraction, 0.7, 1e-15);
    EXPECT_FALSE(r.converged);

    r = dorfler_mark(eta, 0.25);
    EXPECT_EQ(r.marked, (std::vector<int>{0}));

    // 1 - eps with eps below the smallest share marks everything.
    r = dorfler_mark(eta, 1.0 - 0.05);
    EXPECT_EQ(r.marked, (std::vector<int>{0, 1, 2, 3}));
    EXPECT_DOUBLE_EQ(r.achieved_fraction, 1.0);

    // Ties go to the lower id.
    r = dorfler_mark(std::vector<double>{1, 2, 2, 1}, 0.3);
    EXPECT_EQ(r.marked, (std::vector<int>{1}));
    r = dorfler_mark(std::vector<double>{1, 1, 1, 1}, 0.5);
    EXPECT_EQ(r.marked, (std::vector<int>{0, 1}));
}

TEST(Dorfler, ZeroTotalIsConverged)
{
    const auto r = dorfler_mark(std::vector<double>{0, 0, 0}, 0.5);
    EXPECT_TRUE(r.converged);
    EXPECT_TRUE(r.marked.empty());
    EXPECT_TRUE(dorfler_mark(std::vector<double>{}, 0.5).converged);
}

TEST(Dorfler, RejectsBadInput)
{
    const std::vector<double> eta{1, 2};
    EXPECT_THROW(dorfler_mark(eta, 0.0), Error);
    EXPECT_THROW(dorfler_mark(eta, 1.0), Error);
    EXPECT_THROW(dorfler_mark(std::vector<double>{1, -1}, 0.5), Error);
    EXPECT_THROW(dorfler_mark(std::vector<double>{1, std::nan("")}, 0.5), Error);
}

TEST(DorflerProperty, ThousandRandomFields)
{
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> unit(0.01, 0.99);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto eta = random_field(rng);
        double total = 0.0;
        for (double v : eta) total += v;
        const double theta = unit(rng);
        const auto r = dorfler_mark(eta, theta);
        ASSERT_FALSE(r.marked.empty());
        ASSERT_TRUE(std::is_sorted(r.marked.begin(), r.marked.end()));

        // Doerfler property.
        ASSERT_GE(sum_over(eta, r.marked), theta * total * (1 - 1e-14));

        // Minimal cardinality: dropping the smallest marked indicator fails,
        // and no unmarked element is larger than a marked one.
        auto smallest = *std::min_element(r.marked.begin(), r.marked.end(),
                                          [&](int a, int b) { return eta[a] < eta[b]; });
        std::vector<int> fewer;
        for (int i : r.marked)
            if (i != smallest) fewer.push_back(i);
        ASSERT_LT(sum_over(eta, fewer), theta * total);
        for (int i = 0; i < static_cast<int>(eta.size()); ++i)
            if (!std::binary_search(r.marked.begin(), r.marked.end(), i)) ASSERT_LE(eta[i], eta[smallest]);

        // Monotone in theta.
        const double theta2 = theta + (1 - theta) * unit(rng);
        const auto r2 = dorfler_mark(eta, theta2);
        ASSERT_TRUE(std::includes(r2.marked.begin(), r2.marked.end(), r.marked.begin(), r.marked.end()));

        // Permutation invariance of the marked values.
        std::vector<int> perm(eta.size());
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<double> shuffled(eta.size());
        for (std::size_t i = 0; i < eta.size(); ++i) shuffled[i] = eta[perm[i]];
        const auto rp = dorfler_mark(shuffled, theta);
        std::vector<double> a, b;
        for (int i : r.marked) a.push_back(eta[i]);
        for (int i : rp.marked) b.push_back(shuffled[i]);
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        ASSERT_EQ(a, b);

        // Determinism.
        ASSERT_EQ(dorfler_mark(eta, theta).marked, r.marked);
    }
}
