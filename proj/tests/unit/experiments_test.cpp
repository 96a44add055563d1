#include <gtest/gtest.h>

#include <cmath>

#include "pprlab/experiments.hpp"
#include "pprlab/instance.hpp"

using namespace pprlab;

namespace {

LabeledMultigraph instance(const InstanceParams& p, const SigmaSample& s) {
    return build_padded_instance(p, s);
}

/// Issues every X in-port query, revealing all Y -> X edges.
Transcript full_transcript(const InstanceParams& p, const LabeledMultigraph& g) {
    QueryScript script;
    const InstanceLayout layout(p);
    for (int i = 1; i <= 2 * p.n; ++i) {
        for (int k = 1; k <= p.core_degree(); ++k) {
            script.push_back(AdjInQuery{layout.x(i), static_cast<Port>(k)});
        }
    }
    return run_script(g, script, 1);
}

}  // namespace

TEST(CondProb, EmptyCounters) {
    const InstanceParams p{3, 2, 1, 0, 0.5};
    const EdgeCounters c(p);
    EXPECT_DOUBLE_EQ(cond_prob(c, 1, 1, 1), 2.0 / 27);
    EXPECT_DOUBLE_EQ(cond_prob(c, 2, 2, 4), 2.0 / 27);
    EXPECT_DOUBLE_EQ(cond_prob(c, 1, 2, 1), 1.0 / 27);
    // The warm-up product D/(2D-d) * nD/(n(2D-d)) * 1/(nD).
    EXPECT_DOUBLE_EQ(cond_prob(c, 1, 1, 1), 2.0 / 3 * 6.0 / 9 / 6.0);
}

TEST(CondProb, TotalProbabilityForRandomCounterStates) {
    Rng rng(5);
    for (int trial = 0; trial < 1000; ++trial) {
        const InstanceParams p{3 + static_cast<int>(uniform_below(rng, 4)), 4, 2, 0, 0.5};
        const int q = p.core_degree();
        // A consistent state: reveal random edges of a real sample.
        Rng srng(derive_seed(6, static_cast<std::uint64_t>(trial)));
        const SigmaSample s = sample_sigma(p, srng);
        const auto g = instance(p, s);
        const auto mask = split_mask(s.split, p.n);
        const InstanceLayout layout(p);
        EdgeCounters c(p);
        std::vector<std::vector<bool>> seen(static_cast<std::size_t>(2 * p.n + 1),
                                            std::vector<bool>(static_cast<std::size_t>(q + 1), false));
        const int reveals = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(p.n * q)));
        for (int t = 0; t < reveals; ++t) {
            const int i = 1 + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(2 * p.n)));
            const int k = 1 + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(q)));
            if (seen[i][k]) continue;
            seen[i][k] = true;
            c.add(layout.y_class(g.adj_in(layout.x(i), static_cast<Port>(k)).node), i);
        }
        // Next query: an unrevealed in-port of some x (skip saturated ones).
        const int x = 1 + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(2 * p.n)));
        if (c.to_x(x) == q) continue;
        const int b = mask[static_cast<std::size_t>(x)] ? 1 : 2;
        double in_total = 0.0;
        for (int a = 1; a <= 2; ++a) {
            in_total += (p.n * q - c.to_X(a)) * cond_prob(c, a, b, x);
        }
        EXPECT_NEAR(in_total, 1.0, 1e-12);
        // Next query: an unrevealed out-port of a Y_a node; sum over every
        // unrevealed X in-port.
        for (int a = 1; a <= 2; ++a) {
            if (c.to_X(a) == p.n * q) continue;
            double out_total = 0.0;
            for (int i = 1; i <= 2 * p.n; ++i) {
                if (c.to_x(i) == q) continue;
                const int bi = mask[static_cast<std::size_t>(i)] ? 1 : 2;
                out_total += (q - c.to_x(i)) * cond_prob(c, a, bi, i);
            }
            EXPECT_NEAR(out_total, 1.0, 1e-12);
        }
    }
}

TEST(CondProb, ExhaustedNodeSignalsInconsistency) {
    const InstanceParams p{1, 2, 1, 0, 0.5};
    EdgeCounters c(p);
    for (int k = 0; k < 3; ++k) c.add(1, 1);
    EXPECT_THROW(cond_prob(c, 1, 1, 1), NonPositiveDenominator);
}

TEST(Posterior, EmptyTranscriptIsUniform) {
    const InstanceParams p{3, 2, 1, 0, 0.5};
    const auto post = posterior_splits({}, p);
    ASSERT_EQ(post.splits.size(), 20u);
    for (double v : post.probability) EXPECT_NEAR(v, 1.0 / 20, 1e-15);
}

TEST(Posterior, FullTranscriptIdentifiesSplit) {
    const InstanceParams p{3, 3, 1, 0, 0.5};
    Rng rng(2);
    const SigmaSample s = sample_sigma(p, rng);
    const auto post = posterior_splits(full_transcript(p, instance(p, s)), p);
    EXPECT_NEAR(post.total(), 1.0, 1e-12);
    EXPECT_NEAR(post.of(s.split), 1.0, 1e-12);
}

TEST(Posterior, TooLargeToEnumerate) {
    EXPECT_THROW(posterior_splits({}, InstanceParams{9, 2, 1, 0, 0.5}), EnumerationTooLarge);
}

TEST(Posterior, TrueSplitGainsMassOnAverage) {
    const InstanceParams p{2, 3, 1, 0, 0.5};
    const InstanceLayout layout(p);
    double mean = 0.0;
    const int samples = 1000;
    for (int t = 0; t < samples; ++t) {
        Rng rng(derive_seed(8, static_cast<std::uint64_t>(t)));
        const SigmaSample s = sample_sigma(p, rng);
        const auto g = instance(p, s);
        QueryScript script{AdjInQuery{layout.x(1), 1}, AdjInQuery{layout.x(2), 2},
                           AdjInQuery{layout.x(3), 1}, AdjOutQuery{layout.y2(1), 1}};
        mean += posterior_splits(run_script(g, script, 1), p).of(s.split);
    }
    EXPECT_GE(mean / samples, 1.0 / 6);
}

TEST(Posterior, MatchesRejectionSampling) {
    const InstanceParams p{2, 2, 1, 0, 0.5};
    const InstanceLayout layout(p);
    const QueryScript script{AdjInQuery{layout.x(1), 1}, AdjInQuery{layout.x(3), 2}};
    Rng rng(12);
    const SigmaSample truth = sample_sigma(p, rng);
    const Transcript observed = run_script(instance(p, truth), script, 1);
    const auto post = posterior_splits(observed, p);
    const auto rej = rejection_posterior(p, script, observed, 300'000, 5);
    ASSERT_GT(rej.accepted, 1000u);
    for (std::size_t i = 0; i < post.splits.size(); ++i) {
        const double pr = post.probability[i];
        const double se = std::sqrt(pr * (1 - pr) / static_cast<double>(rej.accepted));
        EXPECT_NEAR(rej.frequency.probability[i], pr, 3 * se + 1e-12) << "split " << i;
    }
}

TEST(LikelihoodRatio, StepsStayBelowBound) {
    // Splits differing by one swapped pair; the per-step ratio bound holds
    // while each swapped node has at most tau * D revealed edges.
    const InstanceParams p{2, 6, 1, 0, 0.5};
    const InstanceLayout layout(p);
    const double tau = 0.5;
    for (int t = 0; t < 200; ++t) {
        Rng rng(derive_seed(31, static_cast<std::uint64_t>(t)));
        const SigmaSample s = sample_sigma(p, rng);
        const auto g = instance(p, s);
        Split other = s.split;
        const int swapped_in = other[0];
        int swapped_out = 1;
        while (std::find(s.split.begin(), s.split.end(), swapped_out) != s.split.end()) ++swapped_out;
        other[0] = swapped_out;
        std::sort(other.begin(), other.end());
        QueryScript script;
        for (int k = 1; k <= 3; ++k) {
            script.push_back(AdjInQuery{layout.x(swapped_in), static_cast<Port>(k)});
            script.push_back(AdjInQuery{layout.x(swapped_out), static_cast<Port>(k)});
        }
        for (double r : likelihood_ratios(run_script(g, script, 1), p, s.split, other)) {
            EXPECT_LE(r, likelihood_ratio_bound(p, tau) + 1e-12);
        }
    }
}

TEST(Frequency, SingleInPortQuery) {
    const InstanceParams p{3, 2, 1, 0, 0.5};
    const InstanceLayout layout(p);
    FrequencyConfig cfg;
    cfg.samples = 200'000;
    cfg.seed = 3;
    cfg.split = {1, 2, 3};
    const auto rep = frequency_vs_formula(p, {AdjInQuery{layout.x(1), 1}}, cfg);
    EXPECT_EQ(rep.bins.size(), 18u);
    for (const auto& bin : rep.bins) {
        EXPECT_TRUE(std::abs(bin.expected - 2.0 / 27) < 1e-15 ||
                    std::abs(bin.expected - 1.0 / 27) < 1e-15);
    }
    EXPECT_LT(rep.max_abs_z, 4.0);
    EXPECT_NEAR(rep.unobserved_mass, 0.0, 1e-12);
}

TEST(Frequency, EmptyScript) {
    const InstanceParams p{3, 2, 1, 0, 0.5};
    FrequencyConfig cfg;
    cfg.samples = 100;
    const auto rep = frequency_vs_formula(p, {}, cfg);
    EXPECT_EQ(rep.bins.size(), 1u);
    EXPECT_EQ(rep.max_abs_z, 0.0);
}

TEST(Frequency, SecondQueryConditionedOnFirst) {
    const InstanceParams p{3, 2, 1, 0, 0.5};
    const InstanceLayout layout(p);
    FrequencyConfig cfg;
    cfg.samples = 400'000;
    cfg.seed = 4;
    cfg.split = {1, 2, 3};
    cfg.prefix = {PortResponse{layout.y1(1), 1}};
    const auto rep = frequency_vs_formula(
        p, {AdjInQuery{layout.x(1), 1}, AdjInQuery{layout.x(1), 2}}, cfg);
    ASSERT_GT(rep.accepted, 10'000u);
    // After one Y1 edge into x_1: E(Y1->x1) = 1, so the next Y1 response has
    // probability (2-1)/((3-1)(9-1)) = 1/16 and a Y2 one (1-0)/((3-1)*9) = 1/18.
    for (const auto& bin : rep.bins) {
        EXPECT_TRUE(std::abs(bin.expected - 1.0 / 16) < 1e-15 ||
                    std::abs(bin.expected - 1.0 / 18) < 1e-15);
    }
    EXPECT_LT(rep.max_abs_z, 4.0);
}

TEST(SuccessCurve, ChanceAtZeroAndCertaintyWithFullBudget) {
    const InstanceParams p{2, 3, 1, 0, 0.5};
    CurveConfig cfg;
    cfg.gammas = {0.0, full_information_gamma(p)};
    cfg.trials = 3000;
    cfg.seed = 9;
    cfg.threads = 2;
    const auto rows = success_curve(p, cfg);
    const double chance = 1.0 / 6;
    EXPECT_NEAR(rows[0].successes / 3000.0, chance, 3 * std::sqrt(chance * (1 - chance) / 3000));
    EXPECT_EQ(rows[0].mean_queries, 0.0);
    EXPECT_EQ(rows[1].successes, 3000u);
}

TEST(SuccessCurve, ThreadCountDoesNotChangeResult) {
    const InstanceParams p{10, 4, 2, 0, 0.3};
    CurveConfig cfg;
    cfg.gammas = {0.2, 1.0};
    cfg.trials = 40;
    cfg.seed = 1;
    for (Strategy s : {Strategy::PortCount, Strategy::MonteCarlo}) {
        cfg.strategy = s;
        cfg.threads = 1;
        const auto a = success_curve(p, cfg);
        cfg.threads = 3;
        const auto b = success_curve(p, cfg);
        for (std::size_t i = 0; i < a.size(); ++i) {
            EXPECT_EQ(a[i].successes, b[i].successes);
            EXPECT_EQ(a[i].mean_queries, b[i].mean_queries);
        }
    }
}

TEST(SplitEnumeration, LexicographicAndComplete) {
    std::vector<Split> all;
    for_each_split(2, [&](const Split& s) { all.push_back(s); });
    EXPECT_EQ(all, (std::vector<Split>{{1, 2}, {1, 3}, {1, 4}, {2, 3}, {2, 4}, {3, 4}}));
}
