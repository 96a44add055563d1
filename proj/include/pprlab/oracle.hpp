#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "pprlab/error.hpp"
#include "pprlab/graph.hpp"
#include "pprlab/random.hpp"

namespace pprlab {

enum class Direction { In, Out };

// Queries of the arc-centric model.
struct JumpQuery {
    friend bool operator==(const JumpQuery&, const JumpQuery&) = default;
};
struct InDegQuery {
    NodeId v = 0;
    friend bool operator==(const InDegQuery&, const InDegQuery&) = default;
};
struct OutDegQuery {
    NodeId v = 0;
    friend bool operator==(const OutDegQuery&, const OutDegQuery&) = default;
};
struct AdjInQuery {
    NodeId v = 0;
    Port k = 0;
    friend bool operator==(const AdjInQuery&, const AdjInQuery&) = default;
};
struct AdjOutQuery {
    NodeId v = 0;
    Port k = 0;
    friend bool operator==(const AdjOutQuery&, const AdjOutQuery&) = default;
};

using Query = std::variant<JumpQuery, InDegQuery, OutDegQuery, AdjInQuery, AdjOutQuery>;

struct NodeResponse {
    NodeId v = 0;
    friend bool operator==(const NodeResponse&, const NodeResponse&) = default;
};
struct DegreeResponse {
    std::size_t degree = 0;
    friend bool operator==(const DegreeResponse&, const DegreeResponse&) = default;
};
/// Adjacency answer in the enhanced model: the neighbor together with the
/// port the edge occupies on the neighbor's side.
struct PortResponse {
    NodeId node = 0;
    Port port = 0;
    friend bool operator==(const PortResponse&, const PortResponse&) = default;
};
struct AbsentResponse {
    friend bool operator==(const AbsentResponse&, const AbsentResponse&) = default;
};

using Response = std::variant<NodeResponse, DegreeResponse, PortResponse, AbsentResponse>;

struct Event {
    Query query;
    Response response;
    friend bool operator==(const Event&, const Event&) = default;
};

using Transcript = std::vector<Event>;

inline Query adj_query(NodeId v, Direction dir, Port k) {
    if (dir == Direction::In) return AdjInQuery{v, k};
    return AdjOutQuery{v, k};
}

inline std::size_t expect_degree(const Response& r) {
    if (const auto* d = std::get_if<DegreeResponse>(&r)) return d->degree;
    throw OracleError("expected a degree response");
}

inline PortEnd expect_port(const Response& r) {
    if (const auto* p = std::get_if<PortResponse>(&r)) return {p->node, p->port};
    throw OracleError("expected an adjacency response");
}

/// Query limit T. Instance-bound budgets use T = floor(gamma * n * D).
struct Budget {
    std::optional<std::size_t> limit;

    static Budget unlimited() { return {}; }
    static Budget of(std::size_t t) { return {t}; }
    static Budget from_gamma(double gamma, std::size_t n, std::size_t D) {
        if (gamma < 0) throw std::invalid_argument("gamma must be non-negative");
        // The slack keeps products such as (20/6) * 6 from rounding down.
        return {static_cast<std::size_t>(
            std::floor(gamma * static_cast<double>(n) * static_cast<double>(D) + 1e-9))};
    }
};

struct OracleOptions {
    bool record_transcript = true;
};

/// Anything estimators can run against: the plain oracle or an adapter
/// such as the lazy lift.
template <typename G>
concept QueryGateway = requires(G& gateway, const G& cgateway, const Query& q) {
    { gateway.issue(q) } -> std::same_as<Response>;
    { cgateway.query_count() } -> std::convertible_to<std::size_t>;
    { cgateway.node_count() } -> std::convertible_to<std::size_t>;
};

/// The only path through which estimators observe a graph. Counts every
/// successful query, enforces the budget, and tracks covered nodes and
/// revealed ports. Single-threaded; the graph must outlive the oracle.
class ArcOracle {
public:
    ArcOracle(const LabeledMultigraph& graph, Budget budget, std::uint64_t jump_seed,
              OracleOptions options = {})
        : graph_(&graph),
          budget_(budget),
          jump_rng_(jump_seed),
          options_(options),
          covered_(graph.node_count() + 1, false),
          revealed_out_(graph.edge_count(), false),
          revealed_in_(graph.edge_count(), false) {}

    /// Node labels 1..node_count() are public in the model.
    std::size_t node_count() const noexcept { return graph_->node_count(); }
    std::size_t query_count() const noexcept { return count_; }
    const Budget& budget() const noexcept { return budget_; }
    std::optional<std::size_t> remaining() const {
        if (!budget_.limit) return std::nullopt;
        return *budget_.limit - count_;
    }
    const Transcript& transcript() const noexcept { return transcript_; }

    /// Marks v as known without a query (e.g. the SSPPR source, or labels
    /// that the instance layout makes public).
    void cover(NodeId v) {
        check_label(v);
        covered_[v] = true;
    }
    void cover_all() { std::fill(covered_.begin() + 1, covered_.end(), true); }
    bool covered(NodeId v) const { return graph_->contains(v) && covered_[v]; }

    /// Whether port k of v (in direction dir) has been exposed by any
    /// adjacency response, from either endpoint.
    bool port_revealed(NodeId v, Direction dir, Port k) const {
        return dir == Direction::Out ? revealed_out_[graph_->out_slot(v, k)]
                                     : revealed_in_[graph_->in_slot(v, k)];
    }

    Response issue(const Query& q) {
        if (budget_.limit && count_ >= *budget_.limit) throw BudgetExhausted();
        Response r = std::visit([this](const auto& query) { return answer(query); }, q);
        ++count_;
        if (options_.record_transcript) transcript_.push_back({q, r});
        return r;
    }

    /// Picks an unrevealed port of v uniformly at random and queries it.
    Response random_uncovered_adj(NodeId v, Direction dir, Rng& rng) {
        require_covered(v);
        const std::size_t degree =
            dir == Direction::Out ? graph_->out_degree(v) : graph_->in_degree(v);
        scratch_.clear();
        for (Port k = 1; k <= degree; ++k) {
            if (!port_revealed(v, dir, k)) scratch_.push_back(k);
        }
        if (scratch_.empty()) {
            throw NoUncoveredPort("every port of node " + std::to_string(v) +
                                  " in this direction is already revealed");
        }
        if (budget_.limit && count_ >= *budget_.limit) throw BudgetExhausted();
        const Port k = scratch_[uniform_below(rng, scratch_.size())];
        return issue(adj_query(v, dir, k));
    }

private:
    void check_label(NodeId v) const {
        if (!graph_->contains(v)) {
            throw RangeError("node " + std::to_string(v) + " is not a label of this graph");
        }
    }

    void require_covered(NodeId v) const {
        check_label(v);
        if (!covered_[v]) throw UncoveredNode("node " + std::to_string(v) + " is not covered");
    }

    Response answer(const JumpQuery&) {
        if (graph_->node_count() == 0) return AbsentResponse{};
        const auto v = static_cast<NodeId>(uniform_below(jump_rng_, graph_->node_count()) + 1);
        covered_[v] = true;
        return NodeResponse{v};
    }

    Response answer(const InDegQuery& q) {
        require_covered(q.v);
        return DegreeResponse{graph_->in_degree(q.v)};
    }

    Response answer(const OutDegQuery& q) {
        require_covered(q.v);
        return DegreeResponse{graph_->out_degree(q.v)};
    }

    Response answer(const AdjOutQuery& q) {
        require_covered(q.v);
        if (q.k < 1 || q.k > graph_->out_degree(q.v)) {
            throw PortOutOfRange("out-port " + std::to_string(q.k) + " of node " +
                                 std::to_string(q.v));
        }
        const PortEnd end = graph_->adj_out(q.v, q.k);
        reveal(q.v, q.k, end.node, end.port);
        return PortResponse{end.node, end.port};
    }

    Response answer(const AdjInQuery& q) {
        require_covered(q.v);
        if (q.k < 1 || q.k > graph_->in_degree(q.v)) {
            throw PortOutOfRange("in-port " + std::to_string(q.k) + " of node " +
                                 std::to_string(q.v));
        }
        const PortEnd end = graph_->adj_in(q.v, q.k);
        reveal(end.node, end.port, q.v, q.k);
        return PortResponse{end.node, end.port};
    }

    void reveal(NodeId source, Port out_port, NodeId target, Port in_port) {
        revealed_out_[graph_->out_slot(source, out_port)] = true;
        revealed_in_[graph_->in_slot(target, in_port)] = true;
        covered_[source] = true;
        covered_[target] = true;
    }

    const LabeledMultigraph* graph_;
    Budget budget_;
    Rng jump_rng_;
    OracleOptions options_;
    std::size_t count_ = 0;
    Transcript transcript_;
    std::vector<bool> covered_;
    std::vector<bool> revealed_out_;
    std::vector<bool> revealed_in_;
    std::vector<Port> scratch_;
};

static_assert(QueryGateway<ArcOracle>);

/// Re-derives every non-JUMP response of a transcript from the graph and
/// checks it matches; JUMP responses are taken as recorded randomness.
inline bool replay_matches(const LabeledMultigraph& g, const Transcript& transcript) {
    for (const Event& e : transcript) {
        const bool ok = std::visit(
            [&](const auto& q) -> bool {
                using Q = std::decay_t<decltype(q)>;
                if constexpr (std::is_same_v<Q, JumpQuery>) {
                    const auto* r = std::get_if<NodeResponse>(&e.response);
                    return r != nullptr && g.contains(r->v);
                } else if constexpr (std::is_same_v<Q, InDegQuery>) {
                    return g.contains(q.v) &&
                           e.response == Response{DegreeResponse{g.in_degree(q.v)}};
                } else if constexpr (std::is_same_v<Q, OutDegQuery>) {
                    return g.contains(q.v) &&
                           e.response == Response{DegreeResponse{g.out_degree(q.v)}};
                } else if constexpr (std::is_same_v<Q, AdjOutQuery>) {
                    if (!g.contains(q.v) || q.k < 1 || q.k > g.out_degree(q.v)) return false;
                    const PortEnd end = g.adj_out(q.v, q.k);
                    return e.response == Response{PortResponse{end.node, end.port}};
                } else {
                    if (!g.contains(q.v) || q.k < 1 || q.k > g.in_degree(q.v)) return false;
                    const PortEnd end = g.adj_in(q.v, q.k);
                    return e.response == Response{PortResponse{end.node, end.port}};
                }
            },
            e.query);
        if (!ok) return false;
    }
    return true;
}

}  // namespace pprlab
