#pragma once

// L-lift of a multigraph. Every node v gains copies v_in_1..v_in_L (when
// in-degree > 0) and v_out_1..v_out_L (when out-degree > 0), wired by
//   spokes:    v --out-port i--> v_out_i,   v_in_i --> v at in-port i
//   threads:   for each edge e = (w, k) -> (v, k') and each i in 1..L,
//              w_out_i --out-port k--> v_in_j at in-port k',
//              j = ((i + rho(e) - 2) mod L) + 1
// where rho injects each node pair's parallel edges into 1..L. The result
// is simple, and one multigraph step becomes exactly three lift steps.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pprlab/error.hpp"
#include "pprlab/graph.hpp"
#include "pprlab/instance.hpp"
#include "pprlab/oracle.hpp"
#include "pprlab/ppr_exact.hpp"
#include "pprlab/random.hpp"

namespace pprlab {

/// Public in/out degrees of every node, indexed by label.
struct DegreeProfile {
    std::vector<std::size_t> in;
    std::vector<std::size_t> out;

    std::size_t node_count() const noexcept { return in.empty() ? 0 : in.size() - 1; }
};

inline DegreeProfile degree_profile(const LabeledMultigraph& g) {
    DegreeProfile p;
    p.in.assign(g.node_count() + 1, 0);
    p.out.assign(g.node_count() + 1, 0);
    for (NodeId v = 1; v <= g.node_count(); ++v) {
        p.in[v] = g.in_degree(v);
        p.out[v] = g.out_degree(v);
    }
    return p;
}

/// Degrees of an instance, known without looking at sigma. Uses padding
/// params.r when `padded` is set.
inline DegreeProfile instance_degree_profile(const InstanceParams& params, bool padded) {
    const InstanceLayout layout(params);
    const std::size_t n = static_cast<std::size_t>(params.n);
    const std::size_t r = padded ? static_cast<std::size_t>(params.r) : 0;
    const std::size_t width = static_cast<std::size_t>(params.core_degree()) + r;
    DegreeProfile p;
    p.in.assign(params.node_count(padded) + 1, 0);
    p.out.assign(params.node_count(padded) + 1, 0);
    p.out[1] = n;
    for (int i = 1; i <= 2 * params.n; ++i) p.in[layout.x(i)] = width;
    for (int j = 1; j <= params.n; ++j) {
        p.in[layout.y1(j)] = 1;
        p.out[layout.y1(j)] = width;
        p.out[layout.y2(j)] = width;
    }
    for (int j = 1; j <= static_cast<int>(r); ++j) {
        p.out[layout.zx(j)] = 2 * n;
        p.in[layout.zy(j)] = 2 * n;
    }
    return p;
}

enum class CopyKind { Original, In, Out };

struct LiftNode {
    NodeId origin = 0;
    CopyKind kind = CopyKind::Original;
    int index = 0;  // copy index 1..L, 0 for originals
};

/// Label assignment of the lift: originals keep 1..N, copies follow in
/// node order, each node's in-copies before its out-copies.
class LiftLayout {
public:
    LiftLayout(const DegreeProfile& profile, int L) : L_(L), profile_(profile) {
        if (L < 1) throw std::invalid_argument("L must be at least 1");
        const std::size_t n = profile.node_count();
        first_in_.assign(n + 1, 0);
        first_out_.assign(n + 1, 0);
        nodes_.assign(n + 1, LiftNode{});
        for (NodeId v = 1; v <= n; ++v) nodes_[v] = {v, CopyKind::Original, 0};
        for (NodeId v = 1; v <= n; ++v) {
            if (profile.in[v] > 0) {
                first_in_[v] = static_cast<NodeId>(nodes_.size());
                for (int i = 1; i <= L; ++i) nodes_.push_back({v, CopyKind::In, i});
            }
            if (profile.out[v] > 0) {
                first_out_[v] = static_cast<NodeId>(nodes_.size());
                for (int i = 1; i <= L; ++i) nodes_.push_back({v, CopyKind::Out, i});
            }
        }
    }

    int L() const noexcept { return L_; }
    std::size_t base_node_count() const noexcept { return profile_.node_count(); }
    std::size_t node_count() const noexcept { return nodes_.size() - 1; }
    const DegreeProfile& profile() const noexcept { return profile_; }

    /// Label of v_in_i, or 0 when v has no in-copies.
    NodeId in_copy(NodeId v, int i) const {
        return first_in_.at(v) == 0 ? 0 : first_in_[v] + static_cast<NodeId>(i - 1);
    }
    NodeId out_copy(NodeId v, int i) const {
        return first_out_.at(v) == 0 ? 0 : first_out_[v] + static_cast<NodeId>(i - 1);
    }
    const LiftNode& node(NodeId label) const {
        if (label < 1 || label > node_count()) throw RangeError("label outside the lift");
        return nodes_[label];
    }
    std::size_t copies_of(NodeId v) const {
        return 1 + (first_in_.at(v) ? L_ : 0) + (first_out_.at(v) ? L_ : 0);
    }
    /// The k-th existing copy of v (k = 0 is v itself).
    NodeId copy_at(NodeId v, std::size_t k) const {
        if (k == 0) return v;
        const auto L = static_cast<std::size_t>(L_);
        if (first_in_[v] != 0) {
            if (k <= L) return first_in_[v] + static_cast<NodeId>(k - 1);
            k -= L;
        }
        return first_out_[v] + static_cast<NodeId>(k - 1);
    }

    std::size_t in_degree(NodeId label) const {
        const LiftNode& nd = node(label);
        switch (nd.kind) {
            case CopyKind::Original: return profile_.in[nd.origin] > 0 ? L_ : 0;
            case CopyKind::In: return profile_.in[nd.origin];
            case CopyKind::Out: return 1;
        }
        return 0;
    }
    std::size_t out_degree(NodeId label) const {
        const LiftNode& nd = node(label);
        switch (nd.kind) {
            case CopyKind::Original: return profile_.out[nd.origin] > 0 ? L_ : 0;
            case CopyKind::In: return 1;
            case CopyKind::Out: return profile_.out[nd.origin];
        }
        return 0;
    }

    /// In-copy index reached from out-copy i through an edge with value rho.
    int thread_target(int i, int rho) const { return ((i + rho - 2) % L_ + L_) % L_ + 1; }
    /// Out-copy index that reaches in-copy j through an edge with value rho.
    int thread_source(int j, int rho) const { return ((j - rho) % L_ + L_) % L_ + 1; }

private:
    int L_;
    DegreeProfile profile_;
    std::vector<NodeId> first_in_;
    std::vector<NodeId> first_out_;
    std::vector<LiftNode> nodes_;
};

/// rho values per edge, indexed like g.edges() (out-slot order).
struct LiftSpec {
    int L = 1;
    std::vector<int> rho;
};

namespace detail {

inline std::uint64_t pair_key(NodeId a, NodeId b) {
    return (static_cast<std::uint64_t>(a) << 32) | b;
}

}  // namespace detail

/// Throws MultiplicityExceeded or InvalidGraph if spec is not a valid
/// injection family for g.
inline void validate_spec(const LabeledMultigraph& g, const LiftSpec& spec) {
    if (spec.L < 1) throw std::invalid_argument("L must be at least 1");
    if (spec.rho.size() != g.edge_count()) throw SizeMismatch("rho has the wrong length");
    const std::size_t mult = multiplicity(g);
    if (mult > static_cast<std::size_t>(spec.L)) {
        throw MultiplicityExceeded("multiplicity " + std::to_string(mult) + " exceeds L=" +
                                   std::to_string(spec.L));
    }
    std::unordered_map<std::uint64_t, std::vector<bool>> used;
    std::size_t slot = 0;
    for (NodeId u = 1; u <= g.node_count(); ++u) {
        for (const PortEnd& end : g.out_ports(u)) {
            const int value = spec.rho[slot++];
            if (value < 1 || value > spec.L) throw InvalidGraph("rho value outside 1..L");
            auto& seen = used[detail::pair_key(u, end.node)];
            seen.resize(static_cast<std::size_t>(spec.L) + 1, false);
            if (seen[static_cast<std::size_t>(value)]) {
                throw InvalidGraph("rho is not injective on pair (" + std::to_string(u) + "," +
                                   std::to_string(end.node) + ")");
            }
            seen[static_cast<std::size_t>(value)] = true;
        }
    }
}

/// rho numbering each pair's parallel edges 1, 2, ... in port order.
inline LiftSpec canonical_spec(const LabeledMultigraph& g, int L) {
    LiftSpec spec{L, {}};
    spec.rho.reserve(g.edge_count());
    std::unordered_map<std::uint64_t, int> next;
    for (NodeId u = 1; u <= g.node_count(); ++u) {
        for (const PortEnd& end : g.out_ports(u)) {
            const int value = ++next[detail::pair_key(u, end.node)];
            if (value > L) {
                throw MultiplicityExceeded("pair (" + std::to_string(u) + "," +
                                           std::to_string(end.node) + ") has more than L=" +
                                           std::to_string(L) + " parallel edges");
            }
            spec.rho.push_back(value);
        }
    }
    return spec;
}

/// Uniformly random injection per pair.
inline LiftSpec random_spec(const LabeledMultigraph& g, int L, Rng& rng) {
    LiftSpec spec = canonical_spec(g, L);
    std::unordered_map<std::uint64_t, std::vector<int>> pools;
    std::size_t slot = 0;
    for (NodeId u = 1; u <= g.node_count(); ++u) {
        for (const PortEnd& end : g.out_ports(u)) {
            auto [it, fresh] = pools.try_emplace(detail::pair_key(u, end.node));
            if (fresh) it->second = random_permutation(L, rng);
            spec.rho[slot] = it->second[static_cast<std::size_t>(spec.rho[slot] - 1)];
            ++slot;
        }
    }
    return spec;
}

inline LabeledMultigraph build_lift(const LabeledMultigraph& g, const LiftSpec& spec) {
    validate_spec(g, spec);
    const LiftLayout layout(degree_profile(g), spec.L);
    const int L = spec.L;
    GraphBuilder builder(layout.node_count());
    std::size_t spokes = 0;
    for (NodeId v = 1; v <= g.node_count(); ++v) {
        spokes += (g.in_degree(v) > 0) + (g.out_degree(v) > 0);
    }
    builder.reserve_edges(spokes * static_cast<std::size_t>(L) +
                          g.edge_count() * static_cast<std::size_t>(L));

    for (NodeId v = 1; v <= g.node_count(); ++v) {
        for (int i = 1; i <= L; ++i) {
            if (g.out_degree(v) > 0) {
                builder.connect_at(v, static_cast<Port>(i), layout.out_copy(v, i), 1);
            }
            if (g.in_degree(v) > 0) {
                builder.connect_at(layout.in_copy(v, i), 1, v, static_cast<Port>(i));
            }
        }
    }
    std::size_t slot = 0;
    for (NodeId w = 1; w <= g.node_count(); ++w) {
        Port k = 1;
        for (const PortEnd& end : g.out_ports(w)) {
            const int rho = spec.rho[slot++];
            for (int i = 1; i <= L; ++i) {
                builder.connect_at(layout.out_copy(w, i), k,
                                   layout.in_copy(end.node, layout.thread_target(i, rho)),
                                   end.port);
            }
            ++k;
        }
    }
    return std::move(builder).freeze();
}

/// Decay factor under which one multigraph step matches three lift steps.
inline double lifted_alpha(double alpha) {
    return 1.0 - std::pow(1.0 - alpha, 3);
}

/// Largest |pi_lift(s, t) - pi_g'(s, t)| over the out-degree-0 nodes t of g,
/// where the lift uses decay alpha and g uses decay 1 - (1 - alpha)^3.
inline double lift_transform_error(const LabeledMultigraph& g, const LiftSpec& spec, NodeId s,
                                   double alpha, double tol = 1e-13) {
    const LabeledMultigraph lift = build_lift(g, spec);
    const PprVector on_lift = exact_ppr(lift, s, alpha, {tol});
    const PprVector on_base = exact_ppr(g, s, lifted_alpha(alpha), {tol});
    double worst = 0.0;
    for (NodeId t = 1; t <= g.node_count(); ++t) {
        if (g.out_degree(t) == 0) worst = std::max(worst, std::abs(on_lift[t] - on_base[t]));
    }
    return worst;
}

inline bool lift_ppr_transform_check(const LabeledMultigraph& g, const LiftSpec& spec, NodeId s,
                                     double alpha, double tol) {
    return lift_transform_error(g, spec, s, alpha) <= tol;
}

/// Gateway over the lift of a hidden multigraph that forwards to an oracle
/// over the multigraph itself. Structural answers (degrees, spokes) cost no
/// inner query; a threaded edge costs one inner adjacency query the first
/// time it is seen, after which its rho value is drawn uniformly from the
/// values its node pair has not used yet.
class LazyLiftOracle {
public:
    struct RevealedEdge {
        NodeId source = 0;
        Port source_port = 0;
        NodeId target = 0;
        Port target_port = 0;
        int rho = 0;
    };

    LazyLiftOracle(ArcOracle& inner, DegreeProfile profile, int L, std::uint64_t seed,
                   Budget budget = Budget::unlimited(), OracleOptions options = {})
        : inner_(&inner),
          layout_(std::move(profile), L),
          rng_(seed),
          budget_(budget),
          options_(options),
          inner_start_(inner.query_count()),
          covered_(layout_.node_count() + 1, false) {
        if (layout_.base_node_count() != inner.node_count()) {
            throw SizeMismatch("degree profile does not match the inner oracle");
        }
    }

    const LiftLayout& layout() const noexcept { return layout_; }
    std::size_t node_count() const noexcept { return layout_.node_count(); }
    std::size_t query_count() const noexcept { return count_; }
    std::size_t inner_query_count() const noexcept { return inner_->query_count() - inner_start_; }
    const Transcript& transcript() const noexcept { return transcript_; }
    const std::vector<RevealedEdge>& revealed() const noexcept { return revealed_; }

    void cover(NodeId label) {
        const LiftNode& nd = layout_.node(label);
        covered_[label] = true;
        inner_->cover(nd.origin);
    }
    bool covered(NodeId label) const {
        return label >= 1 && label <= node_count() && covered_[label];
    }

    Response issue(const Query& q) {
        if (budget_.limit && count_ >= *budget_.limit) throw BudgetExhausted();
        Response r = std::visit([this](const auto& query) { return answer(query); }, q);
        ++count_;
        if (options_.record_transcript) transcript_.push_back({q, r});
        return r;
    }

    /// Extends the revealed rho values to a complete spec for g by giving
    /// every unrevealed edge the smallest value its pair has not used.
    LiftSpec complete_spec(const LabeledMultigraph& g) const {
        LiftSpec spec{layout_.L(), std::vector<int>(g.edge_count(), 0)};
        std::unordered_map<std::uint64_t, std::vector<bool>> used;
        auto mark = [&](NodeId a, NodeId b, int value) {
            auto& seen = used[detail::pair_key(a, b)];
            seen.resize(static_cast<std::size_t>(layout_.L()) + 1, false);
            seen[static_cast<std::size_t>(value)] = true;
        };
        for (const RevealedEdge& e : revealed_) {
            spec.rho[g.out_slot(e.source, e.source_port)] = e.rho;
            mark(e.source, e.target, e.rho);
        }
        std::size_t slot = 0;
        for (NodeId u = 1; u <= g.node_count(); ++u) {
            for (const PortEnd& end : g.out_ports(u)) {
                if (spec.rho[slot] == 0) {
                    auto& seen = used[detail::pair_key(u, end.node)];
                    seen.resize(static_cast<std::size_t>(layout_.L()) + 1, false);
                    int value = 1;
                    while (value <= layout_.L() && seen[static_cast<std::size_t>(value)]) ++value;
                    if (value > layout_.L()) throw MultiplicityExceeded("pair exceeds L");
                    spec.rho[slot] = value;
                    seen[static_cast<std::size_t>(value)] = true;
                }
                ++slot;
            }
        }
        return spec;
    }

private:
    void require_covered(NodeId label) const {
        layout_.node(label);
        if (!covered_[label]) {
            throw UncoveredNode("lift node " + std::to_string(label) + " is not covered");
        }
    }

    void check_port(NodeId label, Port k, std::size_t degree, const char* side) const {
        if (k < 1 || k > degree) {
            throw PortOutOfRange(std::string(side) + "-port " + std::to_string(k) +
                                 " of lift node " + std::to_string(label));
        }
    }

    Response answer(const JumpQuery&) {
        const Response inner = inner_->issue(JumpQuery{});
        const auto* hit = std::get_if<NodeResponse>(&inner);
        if (hit == nullptr) return AbsentResponse{};
        const NodeId label = layout_.copy_at(hit->v, uniform_below(rng_, layout_.copies_of(hit->v)));
        covered_[label] = true;
        return NodeResponse{label};
    }

    Response answer(const InDegQuery& q) {
        require_covered(q.v);
        return DegreeResponse{layout_.in_degree(q.v)};
    }

    Response answer(const OutDegQuery& q) {
        require_covered(q.v);
        return DegreeResponse{layout_.out_degree(q.v)};
    }

    Response answer(const AdjOutQuery& q) {
        require_covered(q.v);
        check_port(q.v, q.k, layout_.out_degree(q.v), "out");
        const LiftNode& nd = layout_.node(q.v);
        PortEnd end;
        switch (nd.kind) {
            case CopyKind::Original:
                end = {layout_.out_copy(nd.origin, static_cast<int>(q.k)), 1};
                break;
            case CopyKind::In:
                end = {nd.origin, static_cast<Port>(nd.index)};
                break;
            case CopyKind::Out: {
                const RevealedEdge& e = edge_from_out(nd.origin, q.k);
                end = {layout_.in_copy(e.target, layout_.thread_target(nd.index, e.rho)),
                       e.target_port};
                break;
            }
        }
        covered_[end.node] = true;
        return PortResponse{end.node, end.port};
    }

    Response answer(const AdjInQuery& q) {
        require_covered(q.v);
        check_port(q.v, q.k, layout_.in_degree(q.v), "in");
        const LiftNode& nd = layout_.node(q.v);
        PortEnd end;
        switch (nd.kind) {
            case CopyKind::Original:
                end = {layout_.in_copy(nd.origin, static_cast<int>(q.k)), 1};
                break;
            case CopyKind::Out:
                end = {nd.origin, static_cast<Port>(nd.index)};
                break;
            case CopyKind::In: {
                const RevealedEdge& e = edge_from_in(nd.origin, q.k);
                end = {layout_.out_copy(e.source, layout_.thread_source(nd.index, e.rho)),
                       e.source_port};
                break;
            }
        }
        covered_[end.node] = true;
        return PortResponse{end.node, end.port};
    }

    const RevealedEdge& edge_from_out(NodeId v, Port k) {
        if (auto it = by_out_.find(detail::pair_key(v, k)); it != by_out_.end()) {
            return revealed_[it->second];
        }
        const PortEnd end = expect_port(inner_->issue(AdjOutQuery{v, k}));
        return record({v, k, end.node, end.port, 0});
    }

    const RevealedEdge& edge_from_in(NodeId v, Port k) {
        if (auto it = by_in_.find(detail::pair_key(v, k)); it != by_in_.end()) {
            return revealed_[it->second];
        }
        const PortEnd end = expect_port(inner_->issue(AdjInQuery{v, k}));
        return record({end.node, end.port, v, k, 0});
    }

    const RevealedEdge& record(RevealedEdge e) {
        auto& used = used_[detail::pair_key(e.source, e.target)];
        used.resize(static_cast<std::size_t>(layout_.L()) + 1, false);
        std::vector<int> free;
        for (int value = 1; value <= layout_.L(); ++value) {
            if (!used[static_cast<std::size_t>(value)]) free.push_back(value);
        }
        if (free.empty()) {
            throw MultiplicityExceeded("pair (" + std::to_string(e.source) + "," +
                                       std::to_string(e.target) + ") has more than L=" +
                                       std::to_string(layout_.L()) + " parallel edges");
        }
        e.rho = free[uniform_below(rng_, free.size())];
        used[static_cast<std::size_t>(e.rho)] = true;
        by_out_[detail::pair_key(e.source, e.source_port)] = revealed_.size();
        by_in_[detail::pair_key(e.target, e.target_port)] = revealed_.size();
        revealed_.push_back(e);
        return revealed_.back();
    }

    ArcOracle* inner_;
    LiftLayout layout_;
    Rng rng_;
    Budget budget_;
    OracleOptions options_;
    std::size_t inner_start_;
    std::size_t count_ = 0;
    Transcript transcript_;
    std::vector<bool> covered_;
    std::vector<RevealedEdge> revealed_;
    std::unordered_map<std::uint64_t, std::size_t> by_out_;
    std::unordered_map<std::uint64_t, std::size_t> by_in_;
    std::unordered_map<std::uint64_t, std::vector<bool>> used_;
};

static_assert(QueryGateway<LazyLiftOracle>);

}  // namespace pprlab
