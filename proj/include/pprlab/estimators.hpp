#pragma once

// Approximate PPR estimators. Every one of them observes the graph only
// through a QueryGateway, so their query counts are exactly what the
// arc-centric model charges.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "pprlab/error.hpp"
#include "pprlab/instance.hpp"
#include "pprlab/oracle.hpp"
#include "pprlab/ppr_exact.hpp"
#include "pprlab/random.hpp"

namespace pprlab {

/// Memoizing view of a gateway: degrees and adjacency answers are fetched
/// once and then served for free.
template <QueryGateway Oracle>
class NeighborhoodCache {
public:
    explicit NeighborhoodCache(Oracle& oracle)
        : oracle_(&oracle),
          out_degree_(oracle.node_count() + 1),
          in_degree_(oracle.node_count() + 1),
          out_(oracle.node_count() + 1),
          in_(oracle.node_count() + 1) {}

    Oracle& oracle() noexcept { return *oracle_; }

    std::size_t out_degree(NodeId v) {
        auto& slot = out_degree_.at(v);
        if (!slot) slot = expect_degree(oracle_->issue(OutDegQuery{v}));
        return *slot;
    }
    std::size_t in_degree(NodeId v) {
        auto& slot = in_degree_.at(v);
        if (!slot) slot = expect_degree(oracle_->issue(InDegQuery{v}));
        return *slot;
    }

    PortEnd adj_out(NodeId v, Port k) { return lookup(out_, v, k, out_degree(v), AdjOutQuery{v, k}); }
    PortEnd adj_in(NodeId v, Port k) { return lookup(in_, v, k, in_degree(v), AdjInQuery{v, k}); }

    /// Always issues a fresh AdjOut query; used when each walk step must be
    /// charged one query.
    PortEnd adj_out_uncached(NodeId v, Port k) {
        const PortEnd end = expect_port(oracle_->issue(AdjOutQuery{v, k}));
        auto& row = out_[v];
        if (row.empty()) row.resize(out_degree(v));
        row[k - 1] = end;
        return end;
    }

private:
    PortEnd lookup(std::vector<std::vector<PortEnd>>& table, NodeId v, Port k, std::size_t degree,
                   const Query& q) {
        auto& row = table[v];
        if (row.empty()) row.resize(degree);
        if (k < 1 || k > degree) throw PortOutOfRange("port out of range in cache lookup");
        PortEnd& cell = row[k - 1];
        if (cell.node == 0) cell = expect_port(oracle_->issue(q));
        return cell;
    }

    Oracle* oracle_;
    std::vector<std::optional<std::size_t>> out_degree_;
    std::vector<std::optional<std::size_t>> in_degree_;
    std::vector<std::vector<PortEnd>> out_;
    std::vector<std::vector<PortEnd>> in_;
};

struct McConfig {
    std::size_t walks = 10'000;
    std::uint64_t seed = 0;
    /// Serve repeated (node, port) steps from memory instead of re-querying.
    /// Off by default so each step costs exactly one adjacency query.
    bool memoize_ports = false;
};

struct EstimateResult {
    PprVector estimate;
    std::size_t queries = 0;
    std::size_t walks = 0;
    /// False when the budget ran out before the estimator finished.
    bool complete = true;
};

namespace detail {

/// One alpha-decay walk from u; returns its end node. The stop coin is
/// flipped before anything is queried.
template <QueryGateway Oracle>
NodeId walk_once(NeighborhoodCache<Oracle>& cache, NodeId u, double alpha, Rng& rng,
                 bool memoize_ports) {
    for (;;) {
        if (bernoulli(rng, alpha)) return u;
        const std::size_t degree = cache.out_degree(u);
        if (degree == 0) return u;
        const auto k = static_cast<Port>(uniform_below(rng, degree) + 1);
        u = memoize_ports ? cache.adj_out(u, k).node : cache.adj_out_uncached(u, k).node;
    }
}

inline void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
}

}  // namespace detail

/// Monte Carlo: the empirical end-point distribution of cfg.walks walks.
/// On budget exhaustion the estimate covers the walks finished so far.
template <QueryGateway Oracle>
EstimateResult mc_estimate(Oracle& oracle, NodeId s, double alpha, const McConfig& cfg) {
    detail::check_alpha(alpha);
    if (cfg.walks < 1) throw std::invalid_argument("walk count must be at least 1");
    const std::size_t start = oracle.query_count();
    NeighborhoodCache<Oracle> cache(oracle);
    Rng rng(cfg.seed);
    std::vector<std::size_t> ends(oracle.node_count() + 1, 0);

    EstimateResult result;
    try {
        for (; result.walks < cfg.walks; ++result.walks) {
            ++ends[detail::walk_once(cache, s, alpha, rng, cfg.memoize_ports)];
        }
    } catch (const BudgetExhausted&) {
        result.complete = false;
    }
    result.estimate.assign(ends.size(), 0.0);
    if (result.walks > 0) {
        for (std::size_t v = 0; v < ends.size(); ++v) {
            result.estimate[v] = static_cast<double>(ends[v]) / static_cast<double>(result.walks);
        }
    }
    result.queries = oracle.query_count() - start;
    return result;
}

struct PushState {
    PprVector estimate;
    std::vector<double> residue;
    double r_max = 0.0;
    std::size_t pushes = 0;
    std::size_t queries = 0;
    bool complete = true;
};

using PushObserver = std::function<void(const PushState&, NodeId pushed)>;

/// Forward Push with a FIFO queue. A node u is pushed while
/// r(u) >= r_max / d_out(u); dangling nodes settle their whole residue.
/// On termination, sum of residues <= m * r_max.
template <QueryGateway Oracle>
PushState forward_push(Oracle& oracle, NodeId s, double alpha, double r_max,
                       const PushObserver& on_push = {}) {
    detail::check_alpha(alpha);
    if (!(r_max > 0.0)) throw std::invalid_argument("r_max must be positive");
    const std::size_t start = oracle.query_count();
    const std::size_t n = oracle.node_count();
    NeighborhoodCache<Oracle> cache(oracle);

    PushState state;
    state.r_max = r_max;
    state.estimate.assign(n + 1, 0.0);
    state.residue.assign(n + 1, 0.0);
    state.residue.at(s) = 1.0;
    std::deque<NodeId> queue;
    std::vector<bool> queued(n + 1, false);

    auto needs_push = [&](NodeId u) {
        const double r = state.residue[u];
        if (r <= 0.0) return false;
        const std::size_t degree = cache.out_degree(u);
        return degree == 0 || r >= r_max / static_cast<double>(degree);
    };
    auto consider = [&](NodeId u) {
        if (!queued[u] && needs_push(u)) {
            queued[u] = true;
            queue.push_back(u);
        }
    };

    try {
        consider(s);
        while (!queue.empty()) {
            const NodeId u = queue.front();
            queue.pop_front();
            queued[u] = false;
            const std::size_t degree = cache.out_degree(u);
            // Fetch the neighborhood before mutating state so that a budget
            // failure mid-scan leaves the invariant intact.
            std::vector<NodeId> targets(degree);
            for (Port k = 1; k <= degree; ++k) targets[k - 1] = cache.adj_out(u, k).node;

            const double r = state.residue[u];
            state.residue[u] = 0.0;
            if (degree == 0) {
                state.estimate[u] += r;
            } else {
                state.estimate[u] += alpha * r;
                const double share = (1.0 - alpha) * r / static_cast<double>(degree);
                for (NodeId v : targets) state.residue[v] += share;
            }
            ++state.pushes;
            if (on_push) on_push(state, u);
            for (NodeId v : targets) consider(v);
        }
    } catch (const BudgetExhausted&) {
        state.complete = false;
    }
    state.queries = oracle.query_count() - start;
    return state;
}

/// Backward Push toward t. estimate[v] approximates pi_v(t) with additive
/// error at most r_max. Since only t can be dangling among the nodes that
/// ever hold residue, a dangling t settles its full residue and scales the
/// mass it hands to in-neighbors by 1/alpha, matching absorbing semantics.
template <QueryGateway Oracle>
PushState backward_push(Oracle& oracle, NodeId t, double alpha, double r_max) {
    detail::check_alpha(alpha);
    if (!(r_max > 0.0)) throw std::invalid_argument("r_max must be positive");
    const std::size_t start = oracle.query_count();
    const std::size_t n = oracle.node_count();
    NeighborhoodCache<Oracle> cache(oracle);

    PushState state;
    state.r_max = r_max;
    state.estimate.assign(n + 1, 0.0);
    state.residue.assign(n + 1, 0.0);
    state.residue.at(t) = 1.0;
    std::deque<NodeId> queue{t};
    std::vector<bool> queued(n + 1, false);
    queued[t] = true;

    try {
        while (!queue.empty()) {
            const NodeId u = queue.front();
            queue.pop_front();
            queued[u] = false;
            const std::size_t in_degree = cache.in_degree(u);
            const bool dangling = cache.out_degree(u) == 0;
            std::vector<NodeId> sources(in_degree);
            std::vector<std::size_t> source_degree(in_degree);
            for (Port k = 1; k <= in_degree; ++k) {
                sources[k - 1] = cache.adj_in(u, k).node;
                source_degree[k - 1] = cache.out_degree(sources[k - 1]);
            }

            const double r = state.residue[u];
            state.residue[u] = 0.0;
            state.estimate[u] += dangling ? r : alpha * r;
            const double carried = dangling ? (1.0 - alpha) * r / alpha : (1.0 - alpha) * r;
            for (std::size_t i = 0; i < sources.size(); ++i) {
                state.residue[sources[i]] += carried / static_cast<double>(source_degree[i]);
            }
            ++state.pushes;
            for (NodeId v : sources) {
                if (!queued[v] && state.residue[v] >= r_max) {
                    queued[v] = true;
                    queue.push_back(v);
                }
            }
        }
    } catch (const BudgetExhausted&) {
        state.complete = false;
    }
    state.queries = oracle.query_count() - start;
    return state;
}

struct ForaResult {
    EstimateResult result;
    PushState push;
};

/// FORA: Forward Push, then ceil(r(u) * W) walks from every node u with
/// leftover residue, each walk ending at v adding r(u) / W_u to v.
template <QueryGateway Oracle>
ForaResult fora(Oracle& oracle, NodeId s, double alpha, double r_max, double walks_total,
                std::uint64_t seed, bool memoize_ports = false) {
    if (!(walks_total > 0.0)) throw std::invalid_argument("walk total must be positive");
    const std::size_t start = oracle.query_count();
    ForaResult out;
    out.push = forward_push(oracle, s, alpha, r_max);
    EstimateResult& res = out.result;
    res.estimate = out.push.estimate;
    res.complete = out.push.complete;
    if (res.complete) {
        NeighborhoodCache<Oracle> cache(oracle);
        Rng rng(seed);
        try {
            for (NodeId u = 1; u < out.push.residue.size(); ++u) {
                const double r = out.push.residue[u];
                if (r <= 0.0) continue;
                const auto walks = static_cast<std::size_t>(std::ceil(r * walks_total));
                const double weight = r / static_cast<double>(walks);
                for (std::size_t w = 0; w < walks; ++w) {
                    res.estimate[detail::walk_once(cache, u, alpha, rng, memoize_ports)] += weight;
                    ++res.walks;
                }
            }
        } catch (const BudgetExhausted&) {
            res.complete = false;
        }
    }
    res.queries = oracle.query_count() - start;
    return out;
}

/// Midpoint between the X1 and X2 closed-form PPR values.
inline double split_threshold(const InstanceParams& p) {
    const double decay2 = (1 - p.alpha) * (1 - p.alpha);
    return decay2 * (p.D - p.d / 2.0) / (static_cast<double>(p.core_degree() + p.r) * p.n);
}

/// Picks n x indices by score: those strictly above `threshold` if there
/// are exactly n of them, otherwise the n best, ties to the smaller index.
inline Split select_split(const std::vector<double>& score, double threshold, int n) {
    Split above;
    for (int i = 1; i <= 2 * n; ++i) {
        if (score[static_cast<std::size_t>(i)] > threshold) above.push_back(i);
    }
    if (static_cast<int>(above.size()) == n) return above;
    std::vector<int> order(static_cast<std::size_t>(2 * n));
    std::iota(order.begin(), order.end(), 1);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return score[static_cast<std::size_t>(a)] > score[static_cast<std::size_t>(b)];
    });
    Split top(order.begin(), order.begin() + n);
    std::sort(top.begin(), top.end());
    return top;
}

/// Classifies X by thresholding PPR estimates at split_threshold(p).
inline Split split_by_threshold(const PprVector& estimates, const InstanceParams& p) {
    const InstanceLayout layout(p);
    if (estimates.size() <= layout.x(2 * p.n)) throw SizeMismatch("estimates do not cover X");
    std::vector<double> score(static_cast<std::size_t>(2 * p.n + 1), 0.0);
    for (int i = 1; i <= 2 * p.n; ++i) score[static_cast<std::size_t>(i)] = estimates[layout.x(i)];
    return select_split(score, split_threshold(p), p.n);
}

}  // namespace pprlab
