#pragma once

// Ground-truth PPR under absorbing semantics: at every step the walk stops
// with probability alpha, otherwise moves to a uniform out-neighbor, and a
// walk that reaches an out-degree-0 node stops there with all its mass.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pprlab/error.hpp"
#include "pprlab/graph.hpp"
#include "pprlab/instance.hpp"

namespace pprlab {

/// Dense probability mass indexed by node label; entry 0 is unused and 0.
using PprVector = std::vector<double>;

inline double total_mass(const PprVector& v) {
    return std::accumulate(v.begin(), v.end(), 0.0);
}

inline double l1_distance(const PprVector& a, const PprVector& b) {
    if (a.size() != b.size()) throw SizeMismatch("vectors differ in length");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
    return sum;
}

struct ExactOptions {
    double tol = 1e-12;
    std::size_t max_iterations = 1'000'000;
};

/// Propagates in-flight mass until less than `tol` remains unsettled, so
/// the result is within tol of the true distribution in L1.
inline PprVector exact_ppr(const LabeledMultigraph& g, NodeId s, double alpha,
                           ExactOptions options = {}) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
    if (!(options.tol > 0.0)) throw std::invalid_argument("tol must be positive");
    if (!g.contains(s)) throw RangeError("source " + std::to_string(s) + " is not a node");

    const std::size_t n = g.node_count();
    PprVector settled(n + 1, 0.0);
    std::vector<double> flight(n + 1, 0.0);
    std::vector<double> next(n + 1, 0.0);
    std::vector<NodeId> active{s};
    std::vector<NodeId> next_active;
    std::vector<bool> queued(n + 1, false);
    flight[s] = 1.0;

    for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
        double in_flight = 0.0;
        for (NodeId u : active) in_flight += flight[u];
        if (in_flight < options.tol) return settled;

        next_active.clear();
        for (NodeId u : active) {
            const double mass = flight[u];
            flight[u] = 0.0;
            if (mass == 0.0) continue;
            const auto outs = g.out_ports(u);
            if (outs.empty()) {
                settled[u] += mass;
                continue;
            }
            settled[u] += alpha * mass;
            const double share = (1.0 - alpha) * mass / static_cast<double>(outs.size());
            for (const PortEnd& end : outs) {
                next[end.node] += share;
                if (!queued[end.node]) {
                    queued[end.node] = true;
                    next_active.push_back(end.node);
                }
            }
        }
        for (NodeId v : next_active) {
            flight[v] = next[v];
            next[v] = 0.0;
            queued[v] = false;
        }
        active.swap(next_active);
    }
    throw Error("exact_ppr did not converge within " + std::to_string(options.max_iterations) +
                " iterations");
}

enum class NodeClass { S, X1, X2, Y1, Y2, ZX, ZY };

/// Exact PPR from s of any node in the given class of U(n,D,d), or of the
/// r-padded instance when `padded` is set.
inline double closed_form_ppr(const InstanceParams& p, NodeClass cls, bool padded) {
    p.validate();
    const double a = p.alpha;
    const double decay2 = (1 - a) * (1 - a);
    const double width = static_cast<double>(p.core_degree() + (padded ? p.r : 0));
    switch (cls) {
        case NodeClass::S: return a;
        case NodeClass::Y1: return a * (1 - a) / p.n;
        case NodeClass::Y2: return 0.0;
        case NodeClass::X1: return decay2 * p.D / (width * p.n);
        case NodeClass::X2: return decay2 * (p.D - p.d) / (width * p.n);
        case NodeClass::ZX: return 0.0;
        case NodeClass::ZY: return padded ? decay2 / width : 0.0;
    }
    return 0.0;
}

/// Class of a node in an instance given its split.
inline NodeClass classify(const InstanceParams& p, const std::vector<bool>& in_x1, NodeId v) {
    const InstanceLayout layout(p);
    switch (layout.role(v)) {
        case Role::Source: return NodeClass::S;
        case Role::X:
            return in_x1[static_cast<std::size_t>(layout.x_index(v))] ? NodeClass::X1
                                                                     : NodeClass::X2;
        case Role::Y1: return NodeClass::Y1;
        case Role::Y2: return NodeClass::Y2;
        case Role::ZX: return NodeClass::ZX;
        case Role::ZY: return NodeClass::ZY;
    }
    return NodeClass::S;
}

/// Closed-form PPR vector of a built instance.
inline PprVector closed_form_vector(const InstanceParams& p, const Split& split, bool padded) {
    const std::vector<bool> in_x1 = split_mask(split, p.n);
    const std::size_t n = p.node_count(padded);
    PprVector out(n + 1, 0.0);
    for (NodeId v = 1; v <= n; ++v) out[v] = closed_form_ppr(p, classify(p, in_x1, v), padded);
    return out;
}

/// Shortest decimal text that parses back to exactly `value`.
inline std::string format_double(double value) {
    char buffer[32];
    const auto end = std::to_chars(buffer, buffer + sizeof buffer, value).ptr;
    return std::string(buffer, end);
}

/// Writes "node,value" rows with round-trip precision.
inline void write_ppr_csv(std::ostream& os, const PprVector& v) {
    os << "node,value\n";
    for (std::size_t i = 1; i < v.size(); ++i) os << i << ',' << format_double(v[i]) << '\n';
}

}  // namespace pprlab
