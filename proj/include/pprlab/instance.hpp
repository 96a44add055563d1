#pragma once

// Hard-instance family U(n, D, d): a source s feeding Y1, and Y = Y1 u Y2
// feeding X = X1 u X2, where X1 nodes take D edges from Y1 and D - d from
// Y2 and X2 nodes the reverse. The split X1/X2 is the hidden secret.
//
// Label layout:
//   s           1
//   x_i         1 + i            i = 1..2n
//   y^(1)_j     2n + 1 + j       j = 1..n
//   y^(2)_j     3n + 1 + j       j = 1..n
//   z^X_j       4n + 1 + j       j = 1..r   (padded instances only)
//   z^Y_j       4n + r + 1 + j   j = 1..r

#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "pprlab/error.hpp"
#include "pprlab/graph.hpp"
#include "pprlab/parallel.hpp"
#include "pprlab/random.hpp"

namespace pprlab {

struct InstanceParams {
    int n = 2;
    int D = 2;
    int d = 1;
    int r = 0;
    double alpha = 0.2;

    /// Y out-degree and X in-degree before padding.
    int core_degree() const noexcept { return 2 * D - d; }
    /// Edges from Y_a into X_b: n*D when a == b, n*(D - d) otherwise.
    int class_edges(int a, int b) const noexcept { return a == b ? n * D : n * (D - d); }

    void validate() const {
        if (n < 1) throw std::invalid_argument("n must be at least 1");
        if (d < 0) throw std::invalid_argument("d must be non-negative");
        if (D < 1 || 2 * D < 3 * d) throw std::invalid_argument("D must satisfy D >= 3d/2 and D >= 1");
        if (r < 0) throw std::invalid_argument("r must be non-negative");
        if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
    }

    std::size_t node_count(bool padded) const {
        return static_cast<std::size_t>(4 * n + 1 + (padded ? 2 * r : 0));
    }
    std::size_t edge_count(bool padded) const {
        const int pad = padded ? 2 * r : 0;
        return static_cast<std::size_t>(2 * n * (core_degree() + pad) + n);
    }

    friend bool operator==(const InstanceParams&, const InstanceParams&) = default;
};

/// Additive/relative error parameters of the SSPPR problems plus the
/// constants used when choosing instance sizes.
struct ErrorParams {
    double eps = 1e-3;
    double delta = 1e-3;
    double c = 0.25;
    double p_f = 0.1;
    double beta = 0.5;
    double C = -1.0;  // negative: use (1 - alpha)^2 / 16
};

enum class Role { Source, X, Y1, Y2, ZX, ZY };

class InstanceLayout {
public:
    explicit InstanceLayout(const InstanceParams& p) : n_(p.n), r_(p.r) {}

    static NodeId source() noexcept { return 1; }
    NodeId x(int i) const noexcept { return static_cast<NodeId>(1 + i); }
    NodeId y1(int j) const noexcept { return static_cast<NodeId>(2 * n_ + 1 + j); }
    NodeId y2(int j) const noexcept { return static_cast<NodeId>(3 * n_ + 1 + j); }
    NodeId y(int a, int j) const noexcept { return a == 1 ? y1(j) : y2(j); }
    NodeId zx(int j) const noexcept { return static_cast<NodeId>(4 * n_ + 1 + j); }
    NodeId zy(int j) const noexcept { return static_cast<NodeId>(4 * n_ + r_ + 1 + j); }

    /// Index i of x_i, or 0 when v is not in X.
    int x_index(NodeId v) const noexcept {
        return (v >= 2 && v <= static_cast<NodeId>(2 * n_ + 1)) ? static_cast<int>(v) - 1 : 0;
    }
    /// 1 or 2 for Y nodes, 0 otherwise.
    int y_class(NodeId v) const noexcept {
        if (v >= y1(1) && v <= y1(n_)) return 1;
        if (v >= y2(1) && v <= y2(n_)) return 2;
        return 0;
    }

    Role role(NodeId v) const {
        if (v == 1) return Role::Source;
        if (x_index(v) != 0) return Role::X;
        if (const int a = y_class(v)) return a == 1 ? Role::Y1 : Role::Y2;
        if (r_ > 0 && v >= zx(1) && v <= zx(r_)) return Role::ZX;
        if (r_ > 0 && v >= zy(1) && v <= zy(r_)) return Role::ZY;
        throw RangeError("label " + std::to_string(v) + " is outside the instance layout");
    }

private:
    int n_;
    int r_;
};

/// Sorted n-subset of {1..2n}: the indices i whose x_i belong to X1.
using Split = std::vector<int>;

/// Membership table indexed by x index 1..2n (entry 0 unused).
inline std::vector<bool> split_mask(const Split& split, int n) {
    std::vector<bool> mask(static_cast<std::size_t>(2 * n + 1), false);
    for (int i : split) mask[static_cast<std::size_t>(i)] = true;
    return mask;
}

/// One draw from the instance distribution: the split plus every
/// permutation and bijection of the construction.
struct SigmaSample {
    Split split;
    /// 2n permutations of {1..2D-d}, flattened: x_perms[(i-1)*(2D-d) + k-1].
    std::vector<int> x_perms;
    /// Permutations of {1..n(2D-d)} over the out-edges of Y1 and Y2.
    std::vector<int> y1_perm;
    std::vector<int> y2_perm;
    /// bijections[(a-1)*2 + (b-1)] matches Y_a out-slots to X_b in-slots.
    std::array<std::vector<int>, 4> bijections;

    int x_perm(int i, int k, int core_degree) const {
        return x_perms[static_cast<std::size_t>((i - 1) * core_degree + (k - 1))];
    }
    const std::vector<int>& bijection(int a, int b) const {
        return bijections[static_cast<std::size_t>((a - 1) * 2 + (b - 1))];
    }

    friend bool operator==(const SigmaSample&, const SigmaSample&) = default;
};

inline Split sample_split(int n, Rng& rng) {
    std::vector<int> indices(static_cast<std::size_t>(2 * n));
    std::iota(indices.begin(), indices.end(), 1);
    // Partial Fisher-Yates: the first n positions are a uniform n-subset.
    for (int i = 0; i < n; ++i) {
        const auto j = static_cast<std::size_t>(i) +
                       uniform_below(rng, static_cast<std::uint64_t>(2 * n - i));
        std::swap(indices[static_cast<std::size_t>(i)], indices[j]);
    }
    Split split(indices.begin(), indices.begin() + n);
    std::sort(split.begin(), split.end());
    return split;
}

/// Draws every component except the split, which is fixed by the caller.
/// Conditioning on a split this way samples exactly the distribution
/// restricted to that split, since the components are independent.
inline SigmaSample sample_sigma_given_split(const InstanceParams& p, Split split, Rng& rng) {
    const int q = p.core_degree();
    SigmaSample sigma;
    sigma.split = std::move(split);
    sigma.x_perms.resize(static_cast<std::size_t>(2 * p.n * q));
    for (int i = 0; i < 2 * p.n; ++i) {
        auto block = std::span<int>(sigma.x_perms).subspan(static_cast<std::size_t>(i * q),
                                                           static_cast<std::size_t>(q));
        std::iota(block.begin(), block.end(), 1);
        fisher_yates(block, rng);
    }
    sigma.y1_perm = random_permutation(p.n * q, rng);
    sigma.y2_perm = random_permutation(p.n * q, rng);
    for (int a = 1; a <= 2; ++a) {
        for (int b = 1; b <= 2; ++b) {
            sigma.bijections[static_cast<std::size_t>((a - 1) * 2 + (b - 1))] =
                random_permutation(p.class_edges(a, b), rng);
        }
    }
    return sigma;
}

inline SigmaSample sample_sigma(const InstanceParams& p, Rng& rng) {
    p.validate();
    Split split = sample_split(p.n, rng);
    return sample_sigma_given_split(p, std::move(split), rng);
}

inline void check_sigma_sizes(const InstanceParams& p, const SigmaSample& sigma) {
    const auto q = static_cast<std::size_t>(p.core_degree());
    const auto n = static_cast<std::size_t>(p.n);
    bool ok = sigma.split.size() == n && sigma.x_perms.size() == 2 * n * q &&
              sigma.y1_perm.size() == n * q && sigma.y2_perm.size() == n * q;
    for (int a = 1; a <= 2 && ok; ++a) {
        for (int b = 1; b <= 2 && ok; ++b) {
            ok = sigma.bijection(a, b).size() == static_cast<std::size_t>(p.class_edges(a, b));
        }
    }
    for (int i : sigma.split) ok = ok && i >= 1 && i <= 2 * p.n;
    if (!ok) throw SizeMismatch("sigma sample does not match the instance parameters");
}

/// Materializes the labeled instance U_sigma (unpadded: 4n+1 nodes,
/// 2n(2D-d)+n edges). A pure function of (params, sigma).
inline LabeledMultigraph build_instance(const InstanceParams& p, const SigmaSample& sigma) {
    p.validate();
    check_sigma_sizes(p, sigma);
    const InstanceLayout layout(p);
    const int n = p.n;
    const int q = p.core_degree();
    const std::vector<bool> in_x1 = split_mask(sigma.split, n);

    GraphBuilder builder(p.node_count(false));
    builder.reserve_edges(p.edge_count(false));
    for (int i = 1; i <= n; ++i) {
        builder.connect_at(InstanceLayout::source(), static_cast<Port>(i), layout.y1(i), 1);
    }

    // In-slots of X_b fed by Y_a, in (x label, port) order.
    std::array<std::vector<PortEnd>, 4> in_slots;
    for (int i = 1; i <= 2 * n; ++i) {
        const int b = in_x1[static_cast<std::size_t>(i)] ? 1 : 2;
        for (int k = 1; k <= q; ++k) {
            // The first D positions of the permuted order come from the
            // node's own side (Y1 for X1, Y2 for X2).
            const int a = sigma.x_perm(i, k, q) <= p.D ? b : 3 - b;
            in_slots[static_cast<std::size_t>((a - 1) * 2 + (b - 1))].push_back(
                {layout.x(i), static_cast<Port>(k)});
        }
    }
    // Out-slots of Y_a toward X_b, in (y index, port) order. Y_a's k-th
    // port points at its heavy partner X_a iff the permuted position is
    // among the first nD.
    std::array<std::vector<PortEnd>, 4> out_slots;
    for (int a = 1; a <= 2; ++a) {
        const std::vector<int>& perm = a == 1 ? sigma.y1_perm : sigma.y2_perm;
        for (int j = 1; j <= n; ++j) {
            for (int k = 1; k <= q; ++k) {
                const int position = perm[static_cast<std::size_t>(q * (j - 1) + (k - 1))];
                const int b = position <= n * p.D ? a : 3 - a;
                out_slots[static_cast<std::size_t>((a - 1) * 2 + (b - 1))].push_back(
                    {layout.y(a, j), static_cast<Port>(k)});
            }
        }
    }
    for (int a = 1; a <= 2; ++a) {
        for (int b = 1; b <= 2; ++b) {
            const auto slot = static_cast<std::size_t>((a - 1) * 2 + (b - 1));
            const std::vector<int>& matching = sigma.bijection(a, b);
            for (std::size_t t = 0; t < matching.size(); ++t) {
                const PortEnd& from = out_slots[slot][t];
                const PortEnd& to = in_slots[slot][static_cast<std::size_t>(matching[t] - 1)];
                builder.connect_at(from.node, from.port, to.node, to.port);
            }
        }
    }
    return std::move(builder).freeze();
}

/// Adds the padding sets Z_X and Z_Y (r nodes each). New X in-ports and
/// new Y out-ports take labels 2D-d+1..2D-d+r, the j-th one attached to the
/// j-th padding node.
inline LabeledMultigraph pad_instance(const LabeledMultigraph& g, const InstanceParams& p, int r) {
    if (r < 0) throw std::invalid_argument("r must be non-negative");
    if (g.node_count() != p.node_count(false)) {
        throw SizeMismatch("pad_instance expects an unpadded instance");
    }
    if (r == 0) return g;
    InstanceParams padded = p;
    padded.r = r;
    const InstanceLayout layout(padded);
    const int n = p.n;
    const int q = p.core_degree();

    GraphBuilder builder(padded.node_count(true));
    builder.reserve_edges(padded.edge_count(true));
    for (const EdgeRef& e : g.edges()) {
        builder.connect_at(e.source, e.source_port, e.target, e.target_port);
    }
    for (int j = 1; j <= r; ++j) {
        for (int i = 1; i <= 2 * n; ++i) {
            builder.connect_at(layout.zx(j), static_cast<Port>(i), layout.x(i),
                               static_cast<Port>(q + j));
        }
        for (int t = 1; t <= 2 * n; ++t) {
            const NodeId y = t <= n ? layout.y1(t) : layout.y2(t - n);
            builder.connect_at(y, static_cast<Port>(q + j), layout.zy(j), static_cast<Port>(t));
        }
    }
    return std::move(builder).freeze();
}

/// build_instance followed by padding with params.r.
inline LabeledMultigraph build_padded_instance(const InstanceParams& p, const SigmaSample& sigma) {
    return pad_instance(build_instance(p, sigma), p, p.r);
}

/// Number of in-edges of x_i whose source lies in Y_a (padding ignored).
inline int count_sources_from(const LabeledMultigraph& g, const InstanceParams& p, int i, int a) {
    const InstanceLayout layout(p);
    int count = 0;
    for (const PortEnd& end : g.in_ports(layout.x(i))) {
        if (layout.y_class(end.node) == a) ++count;
    }
    return count;
}

/// Reads the split back from a built graph: x_i is in X1 iff exactly D of
/// its in-edges come from Y1. Meaningful only when d > 0.
inline Split recover_split(const LabeledMultigraph& g, const InstanceParams& p) {
    Split split;
    for (int i = 1; i <= 2 * p.n; ++i) {
        if (count_sources_from(g, p, i, 1) == p.D) split.push_back(i);
    }
    return split;
}

/// Full degree audit of an (optionally padded) instance against its split.
inline bool satisfies_degree_template(const LabeledMultigraph& g, const InstanceParams& p,
                                      const Split& split, bool padded = false) {
    const InstanceLayout layout(p);
    const int n = p.n;
    const int pad = padded ? p.r : 0;
    const int q = p.core_degree();
    if (g.node_count() != p.node_count(padded) || g.edge_count() != p.edge_count(padded)) {
        return false;
    }
    if (g.in_degree(1) != 0 || g.out_degree(1) != static_cast<std::size_t>(n)) return false;
    for (int i = 1; i <= n; ++i) {
        if (g.adj_out(1, static_cast<Port>(i)) != PortEnd{layout.y1(i), 1}) return false;
    }
    const std::vector<bool> in_x1 = split_mask(split, n);
    for (int i = 1; i <= 2 * n; ++i) {
        const NodeId x = layout.x(i);
        if (g.out_degree(x) != 0 || g.in_degree(x) != static_cast<std::size_t>(q + pad)) {
            return false;
        }
        const int own = in_x1[static_cast<std::size_t>(i)] ? 1 : 2;
        if (count_sources_from(g, p, i, own) != p.D) return false;
        if (count_sources_from(g, p, i, 3 - own) != p.D - p.d) return false;
        for (int j = 1; j <= pad; ++j) {
            if (g.adj_in(x, static_cast<Port>(q + j)).node != layout.zx(j)) return false;
        }
    }
    for (int a = 1; a <= 2; ++a) {
        for (int j = 1; j <= n; ++j) {
            const NodeId y = layout.y(a, j);
            if (g.out_degree(y) != static_cast<std::size_t>(q + pad)) return false;
            if (g.in_degree(y) != (a == 1 ? 1u : 0u)) return false;
            for (int k = 1; k <= q; ++k) {
                if (layout.x_index(g.adj_out(y, static_cast<Port>(k)).node) == 0) return false;
            }
        }
    }
    return ports_consistent(g);
}

// ---------------------------------------------------------------------------
// Parameter choices.

struct ParamsChoiceA {
    InstanceParams params;
    double gap = 0.0;  // pi_s(x1) - pi_s(x2) = (1-alpha)^2 d / ((2D-d) n)
    double C = 0.0;
};

/// Sizes an unpadded instance for the additive-error problem:
/// nD = C beta^2 min(n0^(2-beta), m0, ln(1/eps0)/eps0), n = floor(base^(1/(2-beta))),
/// D = floor(base^((1-beta)/(2-beta))), d = ceil(ln n). Both n and D round
/// down; d rounds up.
inline ParamsChoiceA choose_params_A(double n0, double m0, double eps0, double beta, double alpha,
                                     double C = -1.0) {
    if (!(eps0 > 0 && eps0 < 1)) throw std::invalid_argument("eps0 must lie in (0, 1)");
    if (!(beta > 0 && beta < 1)) throw std::invalid_argument("beta must lie in (0, 1)");
    if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("alpha must lie in (0, 1)");
    if (m0 < n0) throw std::invalid_argument("m0 must be at least n0");
    if (C <= 0) C = (1 - alpha) * (1 - alpha) / 16.0;

    const double base = C * beta * beta *
                        std::min({std::pow(n0, 2 - beta), m0, std::log(1 / eps0) / eps0});
    const double n_real = std::pow(base, 1 / (2 - beta));
    const double D_real = std::pow(base, (1 - beta) / (2 - beta));
    if (!(n_real >= 2) || !(D_real >= 1) || n_real > 1e9) {
        throw InfeasibleParams("n0 too small for eps0: n=" + std::to_string(n_real) +
                               " D=" + std::to_string(D_real));
    }
    InstanceParams p;
    p.n = static_cast<int>(std::floor(n_real));
    p.D = static_cast<int>(std::floor(D_real));
    p.d = static_cast<int>(std::ceil(std::log(static_cast<double>(p.n))));
    p.r = 0;
    p.alpha = alpha;
    if (p.D < 2 * p.d) {
        throw InfeasibleParams("D=" + std::to_string(p.D) + " < 2d=" + std::to_string(2 * p.d) +
                               "; inputs too small for the requested error");
    }
    p.validate();
    const double gap = (1 - alpha) * (1 - alpha) * p.d /
                       (static_cast<double>(p.core_degree()) * p.n);
    return {p, gap, C};
}

/// Root of ln(1/delta)/delta = target on (0, 1), by bisection on ln(delta)
/// to 1e-12 relative tolerance. The left side is strictly decreasing.
inline double solve_log_ratio(double target) {
    if (!(target > 0)) throw std::invalid_argument("target must be positive");
    auto f = [](double log_delta) { return -log_delta * std::exp(-log_delta); };
    double lo = -700.0;  // f(lo) is huge
    double hi = 0.0;     // f(hi) == 0
    if (f(lo) < target) throw InfeasibleParams("target beyond double range");
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) > target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return std::exp(0.5 * (lo + hi));
}

struct ParamsChoiceR {
    InstanceParams params;
    double delta = 0.0;     // solves ln(1/delta)/delta = min(c m0, ln(1/delta0)/delta0)
    bool padded = false;    // true in the n0 <= (1-alpha)^2/(32 delta) branch
    double ratio = 0.0;     // pi_s(x1) / pi_s(x2) = D / (D - d)
    double x2_ppr = 0.0;    // pi_s(x2) on the (padded) instance
};

/// Sizes an instance for the relative-error problem. d = ceil(ln n),
/// D = ceil((1 + 1/(4c)) d); in the padded branch n = n0 and
/// r = ceil((1-alpha)^2 d / (16 c n0 delta)), otherwise
/// n = floor((1-alpha)^2 / (32 delta)) and r = 0. After rounding the
/// ratio D/(D-d) >= 1/(1-c)^2 and pi_s(x2) >= delta are re-checked.
inline ParamsChoiceR choose_params_R(double n0, double m0, double delta0, double c, double alpha) {
    if (!(delta0 > 0 && delta0 < 1)) throw std::invalid_argument("delta0 must lie in (0, 1)");
    if (!(c > 0 && c <= 0.5)) throw std::invalid_argument("c must lie in (0, 1/2]");
    if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("alpha must lie in (0, 1)");
    if (!(m0 > 0) || !(n0 >= 1)) throw std::invalid_argument("n0 and m0 must be positive");

    const double decay2 = (1 - alpha) * (1 - alpha);
    const double delta = solve_log_ratio(std::min(c * m0, std::log(1 / delta0) / delta0));
    const double threshold = decay2 / (32 * delta);

    ParamsChoiceR out;
    out.delta = delta;
    out.padded = n0 <= threshold;
    const double n_real = out.padded ? std::floor(n0) : std::floor(threshold);
    if (n_real < 2 || n_real > 1e9) {
        throw InfeasibleParams("derived n=" + std::to_string(n_real) + " out of range");
    }
    InstanceParams& p = out.params;
    p.alpha = alpha;
    p.n = static_cast<int>(n_real);
    p.d = static_cast<int>(std::ceil(std::log(n_real)));
    p.D = static_cast<int>(std::ceil((1 + 1 / (4 * c)) * p.d));
    if (out.padded) {
        p.r = static_cast<int>(std::ceil(decay2 * p.d / (16 * c * n_real * delta)));
    }
    p.validate();
    if (p.d == 0) throw InfeasibleParams("d = 0 leaves no gap between X1 and X2");

    out.ratio = static_cast<double>(p.D) / (p.D - p.d);
    out.x2_ppr = decay2 * (p.D - p.d) / (static_cast<double>(p.core_degree() + p.r) * p.n);
    if (out.ratio < 1 / ((1 - c) * (1 - c))) {
        throw InfeasibleParams("ratio D/(D-d)=" + std::to_string(out.ratio) +
                               " below 1/(1-c)^2 for c=" + std::to_string(c));
    }
    if (out.x2_ppr < delta) {
        throw InfeasibleParams("pi_s(x2)=" + std::to_string(out.x2_ppr) + " below delta");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Multiplicity tails.

/// Union bound 4 n^2 (4D/n)^L on Pr[multiplicity >= L].
inline double multiplicity_tail_bound(const InstanceParams& p, int L) {
    return 4.0 * p.n * p.n * std::pow(4.0 * p.D / p.n, L);
}

struct TailEstimate {
    std::size_t trials = 0;
    std::size_t hits = 0;
    double empirical = 0.0;
    double bound = 0.0;
    double std_error = 0.0;  // binomial standard error of `empirical`
};

/// Fraction of sampled instances whose edge multiplicity is at least L.
/// Trial t uses seed derive_seed(seed, t), so results do not depend on the
/// thread count.
inline TailEstimate multiplicity_tail(const InstanceParams& p, int L, std::size_t trials,
                                      std::uint64_t seed, unsigned threads = 0) {
    p.validate();
    if (L < 1 || L > p.D) throw std::invalid_argument("L must lie in 1..D");
    if (trials < 1) throw std::invalid_argument("trials must be positive");
    std::vector<char> hit(trials, 0);
    parallel_for(trials, threads, [&](std::size_t t) {
        Rng rng(derive_seed(seed, t));
        const SigmaSample sigma = sample_sigma(p, rng);
        hit[t] = multiplicity(build_instance(p, sigma)) >= static_cast<std::size_t>(L);
    });
    TailEstimate est;
    est.trials = trials;
    est.hits = static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1));
    est.empirical = static_cast<double>(est.hits) / static_cast<double>(trials);
    est.bound = multiplicity_tail_bound(p, L);
    est.std_error = std::sqrt(est.empirical * (1 - est.empirical) / static_cast<double>(trials));
    return est;
}

}  // namespace pprlab
