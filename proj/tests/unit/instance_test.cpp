#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "pprlab/instance.hpp"
#include "pprlab/ppr_exact.hpp"
#include "support/oracles.hpp"

using namespace pprlab;

TEST(Sigma, SameSeedSameSample) {
    const InstanceParams p{5, 4, 2, 0, 0.2};
    Rng a(17), b(17);
    EXPECT_EQ(sample_sigma(p, a), sample_sigma(p, b));
}

TEST(Sigma, ComponentSizes) {
    const InstanceParams p{4, 5, 2, 0, 0.2};
    Rng rng(1);
    const SigmaSample s = sample_sigma(p, rng);
    EXPECT_EQ(s.split.size(), 4u);
    EXPECT_EQ(s.x_perms.size(), 8u * 8u);
    EXPECT_EQ(s.y1_perm.size(), 32u);
    EXPECT_EQ(s.bijection(1, 1).size(), 20u);
    EXPECT_EQ(s.bijection(1, 2).size(), 12u);
    EXPECT_TRUE(std::is_sorted(s.split.begin(), s.split.end()));
}

TEST(Sigma, SplitFrequencyAtNEqualsOne) {
    const InstanceParams p{1, 2, 1, 0, 0.5};
    const int trials = 100'000;
    int first = 0;
    for (int t = 0; t < trials; ++t) {
        Rng rng(derive_seed(5, static_cast<std::uint64_t>(t)));
        first += sample_sigma(p, rng).split == Split{1};
    }
    EXPECT_NEAR(first, trials / 2.0, 3 * std::sqrt(trials * 0.25));
}

TEST(Sigma, PermutationsOfThreeAreUniform) {
    // At (1,2,1) each x permutes {1,2,3}; chi-square over the 6 outcomes
    // with 5 degrees of freedom, critical value 20.5 at p = 0.001.
    const InstanceParams p{1, 2, 1, 0, 0.5};
    const int trials = 60'000;
    std::map<std::vector<int>, int> counts;
    for (int t = 0; t < trials; ++t) {
        Rng rng(derive_seed(9, static_cast<std::uint64_t>(t)));
        const SigmaSample s = sample_sigma(p, rng);
        counts[{s.x_perms.begin(), s.x_perms.begin() + 3}]++;
        counts[{s.y1_perm.begin(), s.y1_perm.end()}]++;
    }
    ASSERT_EQ(counts.size(), 6u);
    const double expected = 2.0 * trials / 6.0;
    double chi2 = 0.0;
    for (const auto& [perm, c] : counts) chi2 += (c - expected) * (c - expected) / expected;
    EXPECT_LT(chi2, 20.5);
}

TEST(Instance, CountsAndTemplate) {
    const InstanceParams p{3, 2, 1, 0, 0.5};
    Rng rng(4);
    const SigmaSample s = sample_sigma(p, rng);
    const auto g = build_instance(p, s);
    EXPECT_EQ(g.node_count(), 13u);
    EXPECT_EQ(g.edge_count(), 21u);
    EXPECT_TRUE(satisfies_degree_template(g, p, s.split));
    EXPECT_EQ(recover_split(g, p), s.split);
}

TEST(Instance, OwnSidePortsFollowPermutation) {
    const InstanceParams p{6, 5, 2, 0, 0.2};
    Rng rng(8);
    const SigmaSample s = sample_sigma(p, rng);
    const auto g = build_instance(p, s);
    const InstanceLayout layout(p);
    const auto mask = split_mask(s.split, p.n);
    for (int i = 1; i <= 2 * p.n; ++i) {
        const int own = mask[static_cast<std::size_t>(i)] ? 1 : 2;
        for (int k = 1; k <= p.core_degree(); ++k) {
            const int a = layout.y_class(g.adj_in(layout.x(i), static_cast<Port>(k)).node);
            EXPECT_EQ(a == own, s.x_perm(i, k, p.core_degree()) <= p.D);
        }
    }
}

TEST(Instance, ZeroGapMakesClassesIdentical) {
    const InstanceParams p{4, 3, 0, 0, 0.5};
    Rng rng(2);
    const SigmaSample s = sample_sigma(p, rng);
    const auto g = build_instance(p, s);
    for (int i = 1; i <= 2 * p.n; ++i) {
        EXPECT_EQ(count_sources_from(g, p, i, 1), 3);
        EXPECT_EQ(count_sources_from(g, p, i, 2), 3);
    }
}

TEST(Instance, ExhaustiveTemplateAtSmallestSize) {
    const InstanceParams p{1, 2, 1, 0, 0.5};
    std::size_t visited = 0;
    std::set<std::string> distinct;
    reference::for_each_sigma(p, [&](const SigmaSample& s) {
        const auto g = build_instance(p, s);
        ASSERT_TRUE(satisfies_degree_template(g, p, s.split));
        ASSERT_EQ(recover_split(g, p), s.split);
        ++visited;
    });
    EXPECT_EQ(visited, 2u * 36u * 36u * 4u);
}

TEST(Instance, SizeMismatchRejected) {
    const InstanceParams p{3, 2, 1, 0, 0.5};
    Rng rng(1);
    SigmaSample s = sample_sigma(p, rng);
    s.y1_perm.pop_back();
    EXPECT_THROW(build_instance(p, s), SizeMismatch);
}

TEST(Instance, ParamsValidation) {
    EXPECT_THROW((InstanceParams{0, 2, 1, 0, 0.5}).validate(), std::invalid_argument);
    EXPECT_THROW((InstanceParams{3, 2, 2, 0, 0.5}).validate(), std::invalid_argument);
    EXPECT_THROW((InstanceParams{3, 2, 1, 0, 1.0}).validate(), std::invalid_argument);
    EXPECT_THROW((InstanceParams{3, 2, 1, -1, 0.5}).validate(), std::invalid_argument);
    EXPECT_NO_THROW((InstanceParams{3, 3, 2, 0, 0.5}).validate());
}

TEST(Padding, ZeroIsIdentity) {
    const InstanceParams p{3, 2, 1, 0, 0.5};
    Rng rng(3);
    const auto g = build_instance(p, sample_sigma(p, rng));
    EXPECT_EQ(pad_instance(g, p, 0), g);
}

TEST(Padding, CountsAndPorts) {
    InstanceParams p{3, 2, 1, 2, 0.5};
    Rng rng(3);
    const SigmaSample s = sample_sigma(p, rng);
    const auto g = build_padded_instance(p, s);
    EXPECT_EQ(g.node_count(), 17u);
    EXPECT_EQ(g.edge_count(), 45u);
    EXPECT_TRUE(satisfies_degree_template(g, p, s.split, true));
    const InstanceLayout layout(p);
    for (int a = 1; a <= 2; ++a) {
        for (int j = 1; j <= p.n; ++j) {
            const NodeId y = layout.y(a, j);
            EXPECT_EQ(g.out_degree(y), 5u);
            EXPECT_EQ(g.adj_out(y, 4).node, layout.zy(1));
            EXPECT_EQ(g.adj_out(y, 5).node, layout.zy(2));
        }
    }
    EXPECT_EQ(g.adj_in(layout.x(2), 4), (PortEnd{layout.zx(1), 2}));
}

TEST(ParamsA, GapMatchesExactPpr) {
    const auto choice = choose_params_A(1e9, 1e12, 1e-5, 0.3, 0.2);
    const InstanceParams& p = choice.params;
    EXPECT_GE(p.D, 2 * p.d);
    EXPECT_EQ(p.d, static_cast<int>(std::ceil(std::log(p.n))));
    Rng rng(1);
    const SigmaSample s = sample_sigma(p, rng);
    const auto g = build_instance(p, s);
    const auto pi = exact_ppr(g, 1, p.alpha);
    const InstanceLayout layout(p);
    const auto mask = split_mask(s.split, p.n);
    int x1 = 0, x2 = 0;
    for (int i = 1; i <= 2 * p.n && (x1 == 0 || x2 == 0); ++i) {
        (mask[static_cast<std::size_t>(i)] ? x1 : x2) = i;
    }
    EXPECT_NEAR(pi[layout.x(x1)] - pi[layout.x(x2)], choice.gap, 1e-12);
}

TEST(ParamsA, GapExceedsTwiceEpsilonForLargeInputs) {
    for (double eps : {1e-5, 1e-6, 1e-7}) {
        const auto choice = choose_params_A(1e9, 1e12, eps, 0.5, 0.2);
        EXPECT_GT(choice.gap, 2 * eps) << "eps " << eps;
    }
}

TEST(ParamsA, TinyInputsInfeasible) {
    EXPECT_THROW(choose_params_A(10, 100, 1e-9, 0.5, 0.2), InfeasibleParams);
}

TEST(ParamsR, LogRatioSolver) {
    for (double target : {5.0, 100.0, 1e4, 1e7}) {
        const double delta = solve_log_ratio(target);
        EXPECT_NEAR(std::log(1 / delta) / delta, target, target * 1e-9);
    }
}

TEST(ParamsR, UnpaddedBranch) {
    const auto choice = choose_params_R(1000, 1e9, 1e-4, 0.25, 0.5);
    EXPECT_FALSE(choice.padded);
    EXPECT_EQ(choice.params.r, 0);
    EXPECT_GT(1000, 0.25 / (32 * choice.delta));
}

TEST(ParamsR, PaddedBranchMeetsGuarantees) {
    const auto choice = choose_params_R(50, 1e9, 1e-4, 0.25, 0.5);
    ASSERT_TRUE(choice.padded);
    const InstanceParams& p = choice.params;
    EXPECT_EQ(p.n, 50);
    EXPECT_GT(p.r, 0);
    EXPECT_GE(choice.ratio, 1 / (0.75 * 0.75));
    Rng rng(6);
    const SigmaSample s = sample_sigma(p, rng);
    const auto g = build_padded_instance(p, s);
    const auto pi = exact_ppr(g, 1, p.alpha);
    const InstanceLayout layout(p);
    const auto mask = split_mask(s.split, p.n);
    for (int i = 1; i <= 2 * p.n; ++i) {
        const double v = pi[layout.x(i)];
        if (!mask[static_cast<std::size_t>(i)]) {
            EXPECT_GE(v, choice.delta);
            EXPECT_NEAR(v, choice.x2_ppr, 1e-12);
        }
    }
}

TEST(ParamsR, RatioIsExactOnBuiltInstance) {
    const auto choice = choose_params_R(40, 1e9, 1e-3, 0.2, 0.3);
    const InstanceParams& p = choice.params;
    Rng rng(2);
    const SigmaSample s = sample_sigma(p, rng);
    const auto pi = exact_ppr(build_padded_instance(p, s), 1, p.alpha);
    const InstanceLayout layout(p);
    const auto mask = split_mask(s.split, p.n);
    double x1 = 0, x2 = 0;
    for (int i = 1; i <= 2 * p.n; ++i) (mask[static_cast<std::size_t>(i)] ? x1 : x2) = pi[layout.x(i)];
    EXPECT_NEAR(x2, static_cast<double>(p.D - p.d) / p.D * x1, 1e-15);
}

TEST(ParamsR, LargeCIsInfeasible) {
    // With D = ceil((1 + 1/(4c)) d), D/(D-d) stays near 1 + 4c, which falls
    // short of 1/(1-c)^2 once c is large.
    EXPECT_THROW(choose_params_R(50, 1e9, 1e-4, 0.5, 0.5), InfeasibleParams);
}

TEST(Multiplicity, LevelOneAlwaysHit) {
    const InstanceParams p{20, 4, 2, 0, 0.2};
    const auto est = multiplicity_tail(p, 1, 50, 3, 1);
    EXPECT_EQ(est.empirical, 1.0);
}

TEST(Multiplicity, ThreadCountDoesNotChangeResult) {
    const InstanceParams p{30, 6, 2, 0, 0.2};
    const auto one = multiplicity_tail(p, 2, 64, 5, 1);
    const auto four = multiplicity_tail(p, 2, 64, 5, 4);
    EXPECT_EQ(one.hits, four.hits);
}

TEST(Multiplicity, BoundFormula) {
    const InstanceParams p{10'000, 5, 2, 0, 0.2};
    EXPECT_NEAR(multiplicity_tail_bound(p, 4), 6.4e-3, 1e-15);
    EXPECT_NEAR(multiplicity_tail_bound(p, 2), 1600.0, 1e-9);
}
