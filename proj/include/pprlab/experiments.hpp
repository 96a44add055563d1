#pragma once

// Experiments on the split-recovery problem: the conditional probability
// of adjacency responses given the split, the posterior over splits given
// a transcript, Monte Carlo checks of both, and budgeted success curves.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "pprlab/error.hpp"
#include "pprlab/estimators.hpp"
#include "pprlab/instance.hpp"
#include "pprlab/oracle.hpp"
#include "pprlab/parallel.hpp"
#include "pprlab/random.hpp"

namespace pprlab {

/// Revealed Y -> X edge counts: E(Y_a -> x) per x and E(Y_a -> X) per a.
class EdgeCounters {
public:
    explicit EdgeCounters(const InstanceParams& p)
        : params_(p),
          per_x_{std::vector<int>(static_cast<std::size_t>(2 * p.n + 1), 0),
                 std::vector<int>(static_cast<std::size_t>(2 * p.n + 1), 0)} {}

    const InstanceParams& params() const noexcept { return params_; }

    int to_x(int a, int i) const { return per_x_[idx(a)][static_cast<std::size_t>(i)]; }
    int to_x(int i) const { return to_x(1, i) + to_x(2, i); }
    int to_X(int a) const { return total_[idx(a)]; }

    void add(int a, int i) {
        ++per_x_[idx(a)].at(static_cast<std::size_t>(i));
        ++total_[idx(a)];
    }

private:
    static std::size_t idx(int a) { return a == 1 ? 0 : 1; }

    InstanceParams params_;
    std::array<std::vector<int>, 2> per_x_;
    std::array<int, 2> total_{0, 0};
};

/// Probability that the next unrevealed Y_a -> x edge lands on one
/// particular (y, port) / (x, port) pair, where x is in X_b:
///   (D_ab - E(Y_a->x)) / ((2D-d - E(Y->x)) * (n(2D-d) - E(Y_a->X))),
/// with D_ab = D when a == b and D - d otherwise.
inline double cond_prob(const EdgeCounters& counters, int a, int b, int x_index) {
    const InstanceParams& p = counters.params();
    if ((a != 1 && a != 2) || (b != 1 && b != 2)) throw std::invalid_argument("classes are 1 or 2");
    if (x_index < 1 || x_index > 2 * p.n) throw RangeError("x index outside 1..2n");
    const int q = p.core_degree();
    const double numerator = (a == b ? p.D : p.D - p.d) - counters.to_x(a, x_index);
    const double port_side = q - counters.to_x(x_index);
    const double y_side = static_cast<double>(p.n) * q - counters.to_X(a);
    if (port_side <= 0 || y_side <= 0) {
        throw NonPositiveDenominator("every edge of x or of Y_a is already revealed");
    }
    return std::max(numerator, 0.0) / (port_side * y_side);
}

/// A newly revealed Y_a -> x_i edge, with the counters as they stood before.
struct RevealStep {
    std::size_t event = 0;  // position in the transcript
    int a = 0;
    int x_index = 0;
    int before_a_x = 0;  // E(Y_a -> x) before this step
    double log_denominator = 0.0;
};

/// Walks a transcript and extracts the steps that reveal a new Y -> X edge.
/// Everything else (degree queries, JUMP, repeats, edges at s or Z) has the
/// same probability under every split.
inline std::vector<RevealStep> reveal_steps(const Transcript& transcript, const InstanceParams& p,
                                            EdgeCounters* final_counters = nullptr) {
    const InstanceLayout layout(p);
    EdgeCounters counters(p);
    std::unordered_set<std::uint64_t> seen;
    std::vector<RevealStep> steps;
    const int q = p.core_degree();
    for (std::size_t t = 0; t < transcript.size(); ++t) {
        const Event& e = transcript[t];
        const auto* resp = std::get_if<PortResponse>(&e.response);
        if (resp == nullptr) continue;
        EdgeRef edge;
        if (const auto* in = std::get_if<AdjInQuery>(&e.query)) {
            edge = {resp->node, resp->port, in->v, in->k};
        } else if (const auto* out = std::get_if<AdjOutQuery>(&e.query)) {
            edge = {out->v, out->k, resp->node, resp->port};
        } else {
            continue;
        }
        const int a = layout.y_class(edge.source);
        const int i = layout.x_index(edge.target);
        if (a == 0 || i == 0) continue;
        if (!seen.insert((static_cast<std::uint64_t>(edge.source) << 32) | edge.source_port).second) {
            continue;
        }
        const double port_side = q - counters.to_x(i);
        const double y_side = static_cast<double>(p.n) * q - counters.to_X(a);
        if (port_side <= 0 || y_side <= 0) {
            throw NonPositiveDenominator("transcript reveals more edges than the instance has");
        }
        steps.push_back({t, a, i, counters.to_x(a, i), std::log(port_side) + std::log(y_side)});
        counters.add(a, i);
    }
    if (final_counters) *final_counters = counters;
    return steps;
}

/// Log-likelihood of the revealed steps under a split (mask over x indices);
/// -infinity when the split is inconsistent with the transcript.
inline double split_log_likelihood(const std::vector<RevealStep>& steps, const InstanceParams& p,
                                   const std::vector<bool>& in_x1) {
    double log_like = 0.0;
    for (const RevealStep& s : steps) {
        const int b = in_x1[static_cast<std::size_t>(s.x_index)] ? 1 : 2;
        const int numerator = (s.a == b ? p.D : p.D - p.d) - s.before_a_x;
        if (numerator <= 0) return -std::numeric_limits<double>::infinity();
        log_like += std::log(static_cast<double>(numerator)) - s.log_denominator;
    }
    return log_like;
}

/// Calls f(split) for every n-subset of {1..2n} in lexicographic order.
template <typename F>
void for_each_split(int n, F&& f) {
    Split split(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) split[static_cast<std::size_t>(i)] = i + 1;
    for (;;) {
        f(static_cast<const Split&>(split));
        int i = n - 1;
        while (i >= 0 && split[static_cast<std::size_t>(i)] == n + i + 1) --i;
        if (i < 0) return;
        ++split[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < n; ++j) {
            split[static_cast<std::size_t>(j)] = split[static_cast<std::size_t>(j - 1)] + 1;
        }
    }
}

struct SplitPosterior {
    std::vector<Split> splits;          // lexicographic order
    std::vector<double> probability;    // same order

    double of(const Split& split) const {
        const auto it = std::lower_bound(splits.begin(), splits.end(), split);
        if (it == splits.end() || *it != split) return 0.0;
        return probability[static_cast<std::size_t>(it - splits.begin())];
    }
    double total() const {
        double sum = 0.0;
        for (double v : probability) sum += v;
        return sum;
    }
};

constexpr int kMaxEnumeratedX = 16;

/// Posterior over splits under the uniform prior, by enumeration.
inline SplitPosterior posterior_splits(const Transcript& transcript, const InstanceParams& p) {
    p.validate();
    if (2 * p.n > kMaxEnumeratedX) {
        throw EnumerationTooLarge("2n=" + std::to_string(2 * p.n) + " exceeds " +
                                  std::to_string(kMaxEnumeratedX));
    }
    const std::vector<RevealStep> steps = reveal_steps(transcript, p);
    SplitPosterior post;
    std::vector<double> log_like;
    for_each_split(p.n, [&](const Split& split) {
        post.splits.push_back(split);
        log_like.push_back(split_log_likelihood(steps, p, split_mask(split, p.n)));
    });
    const double best = *std::max_element(log_like.begin(), log_like.end());
    if (!std::isfinite(best)) throw NonPositiveDenominator("no split is consistent with the transcript");
    post.probability.resize(log_like.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < log_like.size(); ++i) {
        post.probability[i] = std::exp(log_like[i] - best);
        sum += post.probability[i];
    }
    for (double& v : post.probability) v /= sum;
    return post;
}

/// Per-step likelihood ratios Pr[step | A] / Pr[step | B] for two splits.
inline std::vector<double> likelihood_ratios(const Transcript& transcript, const InstanceParams& p,
                                             const Split& a_split, const Split& b_split) {
    const auto steps = reveal_steps(transcript, p);
    const auto mask_a = split_mask(a_split, p.n);
    const auto mask_b = split_mask(b_split, p.n);
    std::vector<double> ratios;
    for (const RevealStep& s : steps) {
        auto numerator = [&](const std::vector<bool>& mask) {
            const int b = mask[static_cast<std::size_t>(s.x_index)] ? 1 : 2;
            return static_cast<double>((s.a == b ? p.D : p.D - p.d) - s.before_a_x);
        };
        ratios.push_back(numerator(mask_a) / numerator(mask_b));
    }
    return ratios;
}

/// Upper bound 1 + d / (D (1 - d/D - tau)) on a single step's ratio when the
/// node involved has at most tau * D revealed edges.
inline double likelihood_ratio_bound(const InstanceParams& p, double tau) {
    return 1.0 + p.d / (p.D * (1.0 - static_cast<double>(p.d) / p.D - tau));
}

// ---------------------------------------------------------------------------
// Monte Carlo checks.

using QueryScript = std::vector<Query>;

/// Compact key of a response sequence: one word per response.
using ResponseKey = std::vector<std::uint64_t>;

inline std::uint64_t response_word(const Response& r) {
    return std::visit(
        [](const auto& v) -> std::uint64_t {
            using R = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<R, NodeResponse>) {
                return (1ULL << 62) | v.v;
            } else if constexpr (std::is_same_v<R, DegreeResponse>) {
                return (2ULL << 62) | v.degree;
            } else if constexpr (std::is_same_v<R, PortResponse>) {
                return (3ULL << 62) | (static_cast<std::uint64_t>(v.node) << 24) | v.port;
            } else {
                return 0;
            }
        },
        r);
}

/// Runs a fixed script against an instance with every node covered.
inline Transcript run_script(const LabeledMultigraph& g, const QueryScript& script,
                             std::uint64_t jump_seed) {
    ArcOracle oracle(g, Budget::unlimited(), jump_seed);
    oracle.cover_all();
    for (const Query& q : script) oracle.issue(q);
    return oracle.transcript();
}

struct FrequencyBin {
    ResponseKey key;
    std::size_t count = 0;
    double expected = 0.0;  // formula probability given the conditioning prefix
    double z = 0.0;
};

struct FrequencyReport {
    std::size_t samples = 0;
    std::size_t accepted = 0;     // samples matching the conditioning prefix
    std::vector<FrequencyBin> bins;
    double max_abs_z = 0.0;
    double unobserved_mass = 0.0;  // formula mass of sequences never seen
};

struct FrequencyConfig {
    std::size_t samples = 100'000;
    std::uint64_t seed = 0;
    /// Split held fixed across samples; the formula conditions on it.
    Split split;
    /// Responses the first prefix.size() queries must return for a sample to
    /// count (rejection sampling).
    std::vector<Response> prefix;
    unsigned threads = 0;
};

/// Samples sigma with the split fixed, runs the script, and compares the
/// frequency of every response sequence with the product of cond_prob
/// terms over the steps after the prefix.
inline FrequencyReport frequency_vs_formula(const InstanceParams& p, const QueryScript& script,
                                            const FrequencyConfig& cfg) {
    p.validate();
    if (cfg.prefix.size() > script.size()) throw std::invalid_argument("prefix longer than script");
    Split split = cfg.split;
    if (split.empty()) {
        for (int i = 1; i <= p.n; ++i) split.push_back(i);
    }
    std::sort(split.begin(), split.end());
    const std::vector<bool> mask = split_mask(split, p.n);
    ResponseKey prefix_key;
    for (const Response& r : cfg.prefix) prefix_key.push_back(response_word(r));

    // Fixed chunking keeps results independent of the thread count.
    constexpr std::size_t kChunks = 64;
    struct Tally {
        std::map<ResponseKey, std::size_t> counts;
        std::map<ResponseKey, Transcript> example;
        std::size_t accepted = 0;
    };
    std::vector<Tally> tallies(kChunks);
    parallel_for(kChunks, cfg.threads, [&](std::size_t chunk) {
        Tally& tally = tallies[chunk];
        for (std::size_t s = chunk; s < cfg.samples; s += kChunks) {
            Rng rng(derive_seed(cfg.seed, s));
            const SigmaSample sigma = sample_sigma_given_split(p, split, rng);
            const LabeledMultigraph g = build_padded_instance(p, sigma);
            Transcript tr = run_script(g, script, derive_seed(cfg.seed, s, 1));
            ResponseKey key;
            for (const Event& e : tr) key.push_back(response_word(e.response));
            if (!std::equal(prefix_key.begin(), prefix_key.end(), key.begin())) continue;
            ++tally.accepted;
            if (++tally.counts[key] == 1) tally.example.emplace(key, std::move(tr));
        }
    });

    std::map<ResponseKey, std::size_t> counts;
    std::map<ResponseKey, Transcript> example;
    FrequencyReport report;
    report.samples = cfg.samples;
    for (Tally& t : tallies) {
        report.accepted += t.accepted;
        for (auto& [key, c] : t.counts) counts[key] += c;
        for (auto& [key, tr] : t.example) example.try_emplace(key, std::move(tr));
    }
    double observed_mass = 0.0;
    for (const auto& [key, count] : counts) {
        const auto steps = reveal_steps(example.at(key), p);
        double prob = 1.0;
        EdgeCounters counters(p);
        for (const RevealStep& s : steps) {
            const double term = cond_prob(counters, s.a, mask[static_cast<std::size_t>(s.x_index)] ? 1 : 2,
                                          s.x_index);
            if (s.event >= cfg.prefix.size()) prob *= term;
            counters.add(s.a, s.x_index);
        }
        FrequencyBin bin{key, count, prob, 0.0};
        const double n = static_cast<double>(report.accepted);
        const double sd = std::sqrt(n * prob * (1 - prob));
        bin.z = sd > 0 ? (static_cast<double>(count) - n * prob) / sd
                       : (static_cast<double>(count) == n * prob ? 0.0
                                                                  : std::numeric_limits<double>::infinity());
        report.max_abs_z = std::max(report.max_abs_z, std::abs(bin.z));
        observed_mass += prob;
        report.bins.push_back(std::move(bin));
    }
    report.unobserved_mass = report.accepted > 0 ? std::max(0.0, 1.0 - observed_mass) : 0.0;
    return report;
}

/// Empirical Pr[split | script responses == observed] by rejection over
/// sigma draws with a uniformly random split.
struct RejectionPosterior {
    std::size_t samples = 0;
    std::size_t accepted = 0;
    SplitPosterior frequency;  // empirical conditional frequencies
};

inline RejectionPosterior rejection_posterior(const InstanceParams& p, const QueryScript& script,
                                              const Transcript& observed, std::size_t samples,
                                              std::uint64_t seed, unsigned threads = 0) {
    p.validate();
    if (2 * p.n > kMaxEnumeratedX) throw EnumerationTooLarge("2n too large to enumerate");
    ResponseKey target;
    for (const Event& e : observed) target.push_back(response_word(e.response));

    RejectionPosterior out;
    out.samples = samples;
    for_each_split(p.n, [&](const Split& s) { out.frequency.splits.push_back(s); });
    constexpr std::size_t kChunks = 64;
    std::vector<std::vector<std::size_t>> hits(kChunks,
                                               std::vector<std::size_t>(out.frequency.splits.size(), 0));
    parallel_for(kChunks, threads, [&](std::size_t chunk) {
        for (std::size_t s = chunk; s < samples; s += kChunks) {
            Rng rng(derive_seed(seed, s));
            const SigmaSample sigma = sample_sigma(p, rng);
            const LabeledMultigraph g = build_padded_instance(p, sigma);
            const Transcript tr = run_script(g, script, derive_seed(seed, s, 1));
            bool match = tr.size() == target.size();
            for (std::size_t i = 0; match && i < tr.size(); ++i) {
                match = response_word(tr[i].response) == target[i];
            }
            if (!match) continue;
            const auto it = std::lower_bound(out.frequency.splits.begin(), out.frequency.splits.end(),
                                             sigma.split);
            ++hits[chunk][static_cast<std::size_t>(it - out.frequency.splits.begin())];
        }
    });
    std::vector<double> counts(out.frequency.splits.size(), 0.0);
    for (const auto& h : hits) {
        for (std::size_t i = 0; i < h.size(); ++i) counts[i] += static_cast<double>(h[i]);
    }
    for (double c : counts) out.accepted += static_cast<std::size_t>(c);
    out.frequency.probability.resize(counts.size(), 0.0);
    if (out.accepted > 0) {
        for (std::size_t i = 0; i < counts.size(); ++i) {
            out.frequency.probability[i] = counts[i] / static_cast<double>(out.accepted);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Success curves.

enum class Strategy { PortCount, MonteCarlo };

inline Strategy parse_strategy(const std::string& name) {
    if (name == "portcount") return Strategy::PortCount;
    if (name == "mc") return Strategy::MonteCarlo;
    throw std::invalid_argument("unknown strategy '" + name + "' (expected mc or portcount)");
}

inline const char* strategy_name(Strategy s) {
    return s == Strategy::PortCount ? "portcount" : "mc";
}

inline std::vector<double> default_gamma_grid() {
    return {0.0, 0.05, 0.1, 0.2, 0.4, 0.8, 1.6};
}

/// Budget ratio at which querying every X in-port is affordable.
inline double full_information_gamma(const InstanceParams& p) {
    return 2.0 * p.core_degree() / p.D;
}

/// Round-robin over X spending one random unrevealed in-port query per node
/// per round, then classifies each x by its observed Y1 fraction.
inline Split portcount_strategy(ArcOracle& oracle, const InstanceParams& p, Rng& rng) {
    const InstanceLayout layout(p);
    const int n = p.n;
    std::vector<int> from_y1(static_cast<std::size_t>(2 * n + 1), 0);
    std::vector<int> from_y(static_cast<std::size_t>(2 * n + 1), 0);
    std::vector<bool> exhausted(static_cast<std::size_t>(2 * n + 1), false);
    try {
        bool progress = true;
        while (progress) {
            progress = false;
            for (int i = 1; i <= 2 * n; ++i) {
                if (exhausted[static_cast<std::size_t>(i)]) continue;
                try {
                    const PortEnd end =
                        expect_port(oracle.random_uncovered_adj(layout.x(i), Direction::In, rng));
                    if (const int a = layout.y_class(end.node)) {
                        ++from_y[static_cast<std::size_t>(i)];
                        from_y1[static_cast<std::size_t>(i)] += a == 1;
                    }
                    progress = true;
                } catch (const NoUncoveredPort&) {
                    exhausted[static_cast<std::size_t>(i)] = true;
                }
            }
        }
    } catch (const BudgetExhausted&) {
    }
    const double threshold = (p.D - p.d / 2.0) / p.core_degree();
    std::vector<double> score(static_cast<std::size_t>(2 * n + 1), threshold);
    for (int i = 1; i <= 2 * n; ++i) {
        if (from_y[static_cast<std::size_t>(i)] > 0) {
            score[static_cast<std::size_t>(i)] =
                static_cast<double>(from_y1[static_cast<std::size_t>(i)]) /
                from_y[static_cast<std::size_t>(i)];
        }
    }
    return select_split(score, threshold, n);
}

/// Monte Carlo walks from s until the budget runs out, then thresholding.
inline Split mc_strategy(ArcOracle& oracle, const InstanceParams& p, std::uint64_t seed) {
    McConfig cfg;
    cfg.walks = std::numeric_limits<std::size_t>::max();
    cfg.seed = seed;
    if (!oracle.budget().limit) cfg.walks = 1'000'000;
    const EstimateResult est = mc_estimate(oracle, InstanceLayout::source(), p.alpha, cfg);
    return split_by_threshold(est.estimate, p);
}

struct CurveRow {
    double gamma = 0.0;
    std::size_t trials = 0;
    std::size_t successes = 0;
    double mean_queries = 0.0;
};

struct CurveConfig {
    std::vector<double> gammas = default_gamma_grid();
    Strategy strategy = Strategy::PortCount;
    std::size_t trials = 200;
    std::uint64_t seed = 0;
    unsigned threads = 0;
};

/// For every gamma, the fraction of trials in which the strategy recovers
/// the exact split with budget floor(gamma * n * D). Trial t uses the same
/// instance and strategy randomness for every gamma.
inline std::vector<CurveRow> success_curve(const InstanceParams& p, const CurveConfig& cfg) {
    p.validate();
    if (cfg.trials < 1) throw std::invalid_argument("trials must be at least 1");
    const std::size_t g_count = cfg.gammas.size();
    std::vector<char> success(g_count * cfg.trials, 0);
    std::vector<std::size_t> queries(g_count * cfg.trials, 0);
    parallel_for(cfg.trials, cfg.threads, [&](std::size_t t) {
        Rng instance_rng(derive_seed(cfg.seed, t, 0));
        const SigmaSample sigma = sample_sigma(p, instance_rng);
        const LabeledMultigraph g = build_padded_instance(p, sigma);
        for (std::size_t gi = 0; gi < g_count; ++gi) {
            ArcOracle oracle(g, Budget::from_gamma(cfg.gammas[gi], p.n, p.D), derive_seed(cfg.seed, t, 2),
                             OracleOptions{false});
            oracle.cover_all();
            Split guess;
            if (cfg.strategy == Strategy::PortCount) {
                Rng rng(derive_seed(cfg.seed, t, 1));
                guess = portcount_strategy(oracle, p, rng);
            } else {
                guess = mc_strategy(oracle, p, derive_seed(cfg.seed, t, 1));
            }
            success[gi * cfg.trials + t] = guess == sigma.split;
            queries[gi * cfg.trials + t] = oracle.query_count();
        }
    });
    std::vector<CurveRow> rows;
    for (std::size_t gi = 0; gi < g_count; ++gi) {
        CurveRow row{cfg.gammas[gi], cfg.trials, 0, 0.0};
        double total = 0.0;
        for (std::size_t t = 0; t < cfg.trials; ++t) {
            row.successes += success[gi * cfg.trials + t] != 0;
            total += static_cast<double>(queries[gi * cfg.trials + t]);
        }
        row.mean_queries = total / static_cast<double>(cfg.trials);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace pprlab
