#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pprlab/error.hpp"

namespace pprlab {

/// Node label, 1-based and contiguous over 1..|V|.
using NodeId = std::uint32_t;
/// Port index, 1-based: port k is the k-th in- or out-edge of a node.
using Port = std::uint32_t;

/// The far end of an edge as seen from one endpoint: the neighbor and the
/// port that the edge occupies on the neighbor's side.
struct PortEnd {
    NodeId node = 0;
    Port port = 0;

    friend bool operator==(const PortEnd&, const PortEnd&) = default;
};

struct EdgeRef {
    NodeId source = 0;
    Port source_port = 0;
    NodeId target = 0;
    Port target_port = 0;

    friend bool operator==(const EdgeRef&, const EdgeRef&) = default;
};

/// Port-indexed directed multigraph. Every edge is addressable both as
/// (source, out-port) and as (target, in-port); the two tables are kept
/// mutually consistent. Immutable once built: use GraphBuilder.
class LabeledMultigraph {
public:
    LabeledMultigraph() : out_offset_(2, 0), in_offset_(2, 0) {}

    std::size_t node_count() const noexcept { return out_offset_.size() - 2; }
    std::size_t edge_count() const noexcept { return out_.size(); }

    bool contains(NodeId v) const noexcept { return v >= 1 && v <= node_count(); }

    std::size_t out_degree(NodeId v) const {
        check_node(v);
        return out_offset_[v + 1] - out_offset_[v];
    }
    std::size_t in_degree(NodeId v) const {
        check_node(v);
        return in_offset_[v + 1] - in_offset_[v];
    }

    /// The k-th out-edge of v as (target, target in-port).
    PortEnd adj_out(NodeId v, Port k) const { return out_[out_slot(v, k)]; }
    /// The k-th in-edge of v as (source, source out-port).
    PortEnd adj_in(NodeId v, Port k) const { return in_[in_slot(v, k)]; }

    std::span<const PortEnd> out_ports(NodeId v) const {
        check_node(v);
        return {out_.data() + out_offset_[v], out_offset_[v + 1] - out_offset_[v]};
    }
    std::span<const PortEnd> in_ports(NodeId v) const {
        check_node(v);
        return {in_.data() + in_offset_[v], in_offset_[v + 1] - in_offset_[v]};
    }

    /// Dense edge index in [0, edge_count()) of out-port (v, k). Edges are
    /// numbered by source label, then out-port.
    std::size_t out_slot(NodeId v, Port k) const {
        if (k < 1 || k > out_degree(v)) {
            throw RangeError("out-port " + std::to_string(k) + " of node " + std::to_string(v) +
                             " out of range");
        }
        return out_offset_[v] + k - 1;
    }
    std::size_t in_slot(NodeId v, Port k) const {
        if (k < 1 || k > in_degree(v)) {
            throw RangeError("in-port " + std::to_string(k) + " of node " + std::to_string(v) +
                             " out of range");
        }
        return in_offset_[v] + k - 1;
    }

    /// All edges, ordered by (source, source_port).
    std::vector<EdgeRef> edges() const {
        std::vector<EdgeRef> result;
        result.reserve(edge_count());
        for (NodeId u = 1; u <= node_count(); ++u) {
            Port k = 1;
            for (const PortEnd& end : out_ports(u)) {
                result.push_back({u, k++, end.node, end.port});
            }
        }
        return result;
    }

    friend bool operator==(const LabeledMultigraph&, const LabeledMultigraph&) = default;

private:
    friend class GraphBuilder;

    void check_node(NodeId v) const {
        if (!contains(v)) {
            throw RangeError("node " + std::to_string(v) + " out of range 1.." +
                             std::to_string(node_count()));
        }
    }

    // Offsets are indexed by label; entry 0 is unused so that
    // [offset[v], offset[v + 1]) is node v's slice.
    std::vector<std::size_t> out_offset_;
    std::vector<std::size_t> in_offset_;
    std::vector<PortEnd> out_;
    std::vector<PortEnd> in_;
};

/// Collects edges with explicit or auto-assigned ports, then validates and
/// freezes them into a LabeledMultigraph.
class GraphBuilder {
public:
    explicit GraphBuilder(std::size_t node_count)
        : node_count_(node_count), next_out_(node_count + 1, 1), next_in_(node_count + 1, 1) {}

    std::size_t node_count() const noexcept { return node_count_; }

    void reserve_edges(std::size_t m) { edges_.reserve(m); }

    /// Adds u -> v on the next unused port of each endpoint.
    EdgeRef connect(NodeId u, NodeId v) {
        check_node(u);
        check_node(v);
        EdgeRef e{u, next_out_[u], v, next_in_[v]};
        edges_.push_back(e);
        ++next_out_[u];
        ++next_in_[v];
        return e;
    }

    /// Adds u -> v as u's out-port `out_port` and v's in-port `in_port`.
    void connect_at(NodeId u, Port out_port, NodeId v, Port in_port) {
        check_node(u);
        check_node(v);
        if (out_port == 0 || in_port == 0) throw InvalidGraph("ports are 1-based");
        edges_.push_back({u, out_port, v, in_port});
        next_out_[u] = std::max(next_out_[u], out_port + 1);
        next_in_[v] = std::max(next_in_[v], in_port + 1);
    }

    LabeledMultigraph freeze() && {
        const std::size_t n = node_count_;
        LabeledMultigraph g;
        g.out_offset_.assign(n + 2, 0);
        g.in_offset_.assign(n + 2, 0);
        for (const EdgeRef& e : edges_) {
            if (e.source == e.target) {
                throw InvalidGraph("self-loop at node " + std::to_string(e.source));
            }
            ++g.out_offset_[e.source + 1];
            ++g.in_offset_[e.target + 1];
        }
        // Counts of v sit at v + 1, so the prefix sum leaves offset[v] at the
        // start of v's slice.
        for (std::size_t v = 1; v < n + 2; ++v) {
            g.out_offset_[v] += g.out_offset_[v - 1];
            g.in_offset_[v] += g.in_offset_[v - 1];
        }
        g.out_.assign(edges_.size(), PortEnd{});
        g.in_.assign(edges_.size(), PortEnd{});
        for (const EdgeRef& e : edges_) {
            const std::size_t out_deg = g.out_offset_[e.source + 1] - g.out_offset_[e.source];
            const std::size_t in_deg = g.in_offset_[e.target + 1] - g.in_offset_[e.target];
            if (e.source_port > out_deg) {
                throw InvalidGraph("out-port " + std::to_string(e.source_port) + " of node " +
                                   std::to_string(e.source) + " exceeds out-degree " +
                                   std::to_string(out_deg));
            }
            if (e.target_port > in_deg) {
                throw InvalidGraph("in-port " + std::to_string(e.target_port) + " of node " +
                                   std::to_string(e.target) + " exceeds in-degree " +
                                   std::to_string(in_deg));
            }
            PortEnd& out_cell = g.out_[g.out_offset_[e.source] + e.source_port - 1];
            PortEnd& in_cell = g.in_[g.in_offset_[e.target] + e.target_port - 1];
            if (out_cell.node != 0) {
                throw InvalidGraph("out-port " + std::to_string(e.source_port) + " of node " +
                                   std::to_string(e.source) + " used twice");
            }
            if (in_cell.node != 0) {
                throw InvalidGraph("in-port " + std::to_string(e.target_port) + " of node " +
                                   std::to_string(e.target) + " used twice");
            }
            out_cell = {e.target, e.target_port};
            in_cell = {e.source, e.source_port};
        }
        edges_.clear();
        return g;
    }

private:
    void check_node(NodeId v) const {
        if (v < 1 || v > node_count_) {
            throw InvalidGraph("node " + std::to_string(v) + " out of range 1.." +
                               std::to_string(node_count_));
        }
    }

    std::size_t node_count_;
    std::vector<Port> next_out_;
    std::vector<Port> next_in_;
    std::vector<EdgeRef> edges_;
};

/// Maximum number of parallel edges over ordered node pairs; 0 when edgeless.
inline std::size_t multiplicity(const LabeledMultigraph& g) {
    std::size_t best = 0;
    std::vector<NodeId> targets;
    for (NodeId u = 1; u <= g.node_count(); ++u) {
        targets.clear();
        for (const PortEnd& end : g.out_ports(u)) targets.push_back(end.node);
        std::sort(targets.begin(), targets.end());
        std::size_t run = 0;
        for (std::size_t i = 0; i < targets.size(); ++i) {
            run = (i > 0 && targets[i] == targets[i - 1]) ? run + 1 : 1;
            best = std::max(best, run);
        }
    }
    return best;
}

/// True iff following every out-port and then the reported in-port back
/// lands on the starting (node, out-port), and vice versa.
inline bool ports_consistent(const LabeledMultigraph& g) {
    for (NodeId u = 1; u <= g.node_count(); ++u) {
        const auto outs = g.out_ports(u);
        for (Port k = 1; k <= outs.size(); ++k) {
            const PortEnd& end = outs[k - 1];
            if (!g.contains(end.node) || end.port < 1 || end.port > g.in_degree(end.node)) {
                return false;
            }
            if (g.adj_in(end.node, end.port) != PortEnd{u, k}) return false;
        }
        const auto ins = g.in_ports(u);
        for (Port k = 1; k <= ins.size(); ++k) {
            const PortEnd& end = ins[k - 1];
            if (!g.contains(end.node) || end.port < 1 || end.port > g.out_degree(end.node)) {
                return false;
            }
            if (g.adj_out(end.node, end.port) != PortEnd{u, k}) return false;
        }
    }
    return true;
}

}  // namespace pprlab
