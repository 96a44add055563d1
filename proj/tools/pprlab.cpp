// Command-line driver: generate instances, compute exact and approximate
// PPR, check lifts, run experiments, and verify the library's invariants.
//
// Exit codes: 0 success, 1 a check failed, 2 usage or configuration error.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pprlab/pprlab.hpp"

namespace {

using namespace pprlab;

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

struct RunConfig {
    std::string command;
    InstanceParams params{3, 2, 1, 0, 0.5};
    ErrorParams errors;
    std::string size_rule = "manual";
    double n0 = 0;
    double m0 = 0;
    std::uint64_t seed = 0;
    std::size_t trials = 200;
    std::string gamma_grid = "0,0.05,0.1,0.2,0.4,0.8,1.6";
    long long budget = -1;
    std::string strategy = "portcount";
    std::string out;
    std::string meta;
    std::string format = "csv";
    unsigned threads = 0;
    std::string graph;
    NodeId source = 1;
    NodeId target = 2;
    std::string mode = "curve";
    int L = 0;
    double tol = 1e-9;
    std::string estimator = "mc";
    double r_max = 1e-4;
    std::size_t walks = 10'000;
};

/// The echo written into every output. Output paths and the thread count are
/// left out: neither changes the results, so re-running an echoed config
/// anywhere reproduces the file byte for byte.
Json config_json(const RunConfig& c) {
    Json j;
    j["command"] = c.command;
    j["params"] = to_json(c.params);
    j["errors"] = {{"eps", c.errors.eps}, {"delta", c.errors.delta}, {"c", c.errors.c},
                   {"beta", c.errors.beta}};
    j["size_rule"] = c.size_rule;
    if (c.size_rule != "manual") j["size_inputs"] = {{"n0", c.n0}, {"m0", c.m0}};
    j["seed"] = c.seed;
    j["format"] = c.format;
    if (c.command == "experiment") {
        j["mode"] = c.mode;
        j["trials"] = c.trials;
        if (c.mode == "curve") {
            j["gamma_grid"] = c.gamma_grid;
            j["strategy"] = c.strategy;
        }
        if (c.mode == "multiplicity") j["L"] = c.L;
        if (c.mode == "posterior") j["budget"] = c.budget;
    }
    if (c.command == "ppr" || c.command == "estimate") {
        j["graph"] = c.graph;
        j["source"] = c.source;
        j["tol"] = c.tol;
    }
    if (c.command == "estimate") {
        j["estimator"] = c.estimator;
        j["target"] = c.target;
        j["budget"] = c.budget;
        j["r_max"] = c.r_max;
        j["walks"] = c.walks;
    }
    if (c.command == "lift-check") {
        j["L"] = c.L;
        j["tol"] = c.tol;
    }
    if (c.command == "verify") {
        j["graph"] = c.graph;
        j["tol"] = c.tol;
        j["trials"] = c.trials;
    }
    return j;
}

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string fmt(double v) { return format_double(v); }

/// Destination for the main output: --out or stdout.
class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty()) {
            file_.open(path, std::ios::binary);
            if (!file_) throw UsageError("cannot open output file " + path);
        }
    }
    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }
    bool to_stdout() const { return !file_.is_open(); }

private:
    std::ofstream file_;
};

void write_csv_header(std::ostream& os, const RunConfig& c) {
    os << "# config " << config_json(c).dump() << '\n';
}

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> grid;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            grid.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError("bad gamma grid entry '" + item + "'");
        }
    }
    if (grid.empty()) throw UsageError("gamma grid is empty");
    return grid;
}

/// Resolves the instance parameters, applying a sizing rule if requested.
InstanceParams resolve_params(RunConfig& c) {
    if (c.size_rule == "additive") {
        c.params = choose_params_A(c.n0, c.m0, c.errors.eps, c.errors.beta, c.params.alpha).params;
    } else if (c.size_rule == "relative") {
        c.params = choose_params_R(c.n0, c.m0, c.errors.delta, c.errors.c, c.params.alpha).params;
    } else if (c.size_rule != "manual") {
        throw UsageError("unknown size rule '" + c.size_rule + "'");
    }
    c.params.validate();
    return c.params;
}

struct GeneratedInstance {
    SigmaSample sigma;
    LabeledMultigraph graph;
};

/// The instance every command derives from (params, seed).
GeneratedInstance generate(const InstanceParams& p, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0));
    GeneratedInstance g;
    g.sigma = sample_sigma(p, rng);
    g.graph = build_padded_instance(p, g.sigma);
    return g;
}

LabeledMultigraph load_graph(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open graph file " + path);
    return read_graph(in);
}

LabeledMultigraph graph_for(RunConfig& c) {
    if (!c.graph.empty()) return load_graph(c.graph);
    return generate(resolve_params(c), c.seed).graph;
}

int cmd_generate(RunConfig& c) {
    const InstanceParams p = resolve_params(c);
    const GeneratedInstance inst = generate(p, c.seed);
    Output out(c.out);
    out.stream() << serialize(inst.graph);
    std::string meta_path = c.meta;
    if (meta_path.empty() && !c.out.empty()) meta_path = c.out + ".meta.json";
    if (!meta_path.empty()) {
        Json meta;
        meta["config"] = config_json(c);
        meta["split"] = to_json(inst.sigma.split);
        meta["multiplicity"] = multiplicity(inst.graph);
        meta["nodes"] = inst.graph.node_count();
        meta["edges"] = inst.graph.edge_count();
        std::ofstream m(meta_path, std::ios::binary);
        if (!m) throw UsageError("cannot open metadata file " + meta_path);
        m << meta.dump(2) << '\n';
    }
    return kExitOk;
}

void write_vector(Output& out, const RunConfig& c, const PprVector& v, Json extra) {
    if (c.format == "json") {
        Json j;
        j["config"] = config_json(c);
        for (auto& [key, value] : extra.items()) j[key] = value;
        Json values = Json::array();
        for (std::size_t i = 1; i < v.size(); ++i) values.push_back(v[i]);
        j["values"] = values;
        out.stream() << j.dump(2) << '\n';
    } else {
        write_csv_header(out.stream(), c);
        for (auto& [key, value] : extra.items()) out.stream() << "# " << key << ' ' << value.dump() << '\n';
        write_ppr_csv(out.stream(), v);
    }
}

int cmd_ppr(RunConfig& c) {
    const LabeledMultigraph g = graph_for(c);
    const PprVector pi = exact_ppr(g, c.source, c.params.alpha, {std::min(c.tol, 1e-12)});
    Output out(c.out);
    write_vector(out, c, pi, Json::object());
    return kExitOk;
}

int cmd_estimate(RunConfig& c) {
    const LabeledMultigraph g = graph_for(c);
    const Budget budget = c.budget < 0 ? Budget::unlimited()
                                       : Budget::of(static_cast<std::size_t>(c.budget));
    ArcOracle oracle(g, budget, derive_seed(c.seed, 2), OracleOptions{false});
    const double alpha = c.params.alpha;
    PprVector estimate;
    std::size_t queries = 0, walks = 0;
    bool complete = true;
    if (c.estimator == "mc") {
        oracle.cover(c.source);
        const auto r = mc_estimate(oracle, c.source, alpha, {c.walks, derive_seed(c.seed, 1)});
        estimate = r.estimate;
        queries = r.queries;
        walks = r.walks;
        complete = r.complete;
    } else if (c.estimator == "fp") {
        oracle.cover(c.source);
        const auto st = forward_push(oracle, c.source, alpha, c.r_max);
        estimate = st.estimate;
        queries = st.queries;
        complete = st.complete;
    } else if (c.estimator == "bp") {
        oracle.cover(c.target);
        const auto st = backward_push(oracle, c.target, alpha, c.r_max);
        estimate = st.estimate;
        queries = st.queries;
        complete = st.complete;
    } else if (c.estimator == "fora") {
        oracle.cover(c.source);
        const auto f = fora(oracle, c.source, alpha, c.r_max, static_cast<double>(c.walks),
                            derive_seed(c.seed, 1));
        estimate = f.result.estimate;
        queries = f.result.queries;
        walks = f.result.walks;
        complete = f.result.complete;
    } else {
        throw UsageError("unknown estimator '" + c.estimator + "' (mc, fp, bp, fora)");
    }
    Output out(c.out);
    if (c.format == "json") {
        Json j;
        j["config"] = config_json(c);
        j["result"] = estimate_record(c.estimator, estimate, queries, walks, complete);
        out.stream() << j.dump(2) << '\n';
    } else {
        write_vector(out, c, estimate,
                     Json{{"queries", queries}, {"walks", walks}, {"complete", complete}});
    }
    return complete ? kExitOk : kExitCheckFailed;
}

int cmd_lift_check(RunConfig& c) {
    const InstanceParams p = resolve_params(c);
    const GeneratedInstance inst = generate(p, c.seed);
    const int L = c.L > 0 ? c.L : static_cast<int>(std::max<std::size_t>(multiplicity(inst.graph), 1));
    Rng rng(derive_seed(c.seed, 3));
    const LiftSpec spec = random_spec(inst.graph, L, rng);
    const LabeledMultigraph lift = build_lift(inst.graph, spec);
    const double error = lift_transform_error(inst.graph, spec, 1, p.alpha);
    const bool pass = error <= c.tol && multiplicity(lift) <= 1;
    Output out(c.out);
    Json j;
    j["config"] = config_json(c);
    j["L"] = L;
    j["lift_nodes"] = lift.node_count();
    j["lift_edges"] = lift.edge_count();
    j["lift_multiplicity"] = multiplicity(lift);
    j["max_error"] = error;
    j["pass"] = pass;
    out.stream() << j.dump(2) << '\n';
    return pass ? kExitOk : kExitCheckFailed;
}

int experiment_curve(RunConfig& c, const InstanceParams& p) {
    CurveConfig cfg;
    cfg.gammas = parse_grid(c.gamma_grid);
    cfg.strategy = parse_strategy(c.strategy);
    cfg.trials = c.trials;
    cfg.seed = c.seed;
    cfg.threads = c.threads;
    const auto rows = success_curve(p, cfg);
    Output out(c.out);
    std::ostream& summary = out.to_stdout() ? std::cerr : std::cout;
    for (const auto& row : rows) {
        summary << "gamma=" << fmt(row.gamma) << " successes=" << row.successes << "/" << row.trials
                << " mean_queries=" << fmt(row.mean_queries) << '\n';
    }
    if (c.format == "json") {
        Json j;
        j["config"] = config_json(c);
        Json arr = Json::array();
        for (const auto& row : rows) {
            arr.push_back({{"gamma", row.gamma},
                           {"trials", row.trials},
                           {"successes", row.successes},
                           {"mean_queries", row.mean_queries}});
        }
        j["rows"] = arr;
        out.stream() << j.dump(2) << '\n';
    } else {
        write_csv_header(out.stream(), c);
        out.stream() << "gamma,trials,successes,mean_queries\n";
        for (const auto& row : rows) {
            out.stream() << fmt(row.gamma) << ',' << row.trials << ',' << row.successes << ','
                         << fmt(row.mean_queries) << '\n';
        }
    }
    return kExitOk;
}

int experiment_multiplicity(RunConfig& c, const InstanceParams& p) {
    const int L = c.L > 0 ? c.L : 2;
    const TailEstimate est = multiplicity_tail(p, L, c.trials, c.seed, c.threads);
    Output out(c.out);
    std::ostream& summary = out.to_stdout() ? std::cerr : std::cout;
    summary << "L=" << L << " hits=" << est.hits << "/" << est.trials
            << " empirical=" << fmt(est.empirical) << " bound=" << fmt(est.bound) << '\n';
    if (c.format == "json") {
        Json j;
        j["config"] = config_json(c);
        j["L"] = L;
        j["trials"] = est.trials;
        j["hits"] = est.hits;
        j["empirical"] = est.empirical;
        j["bound"] = est.bound;
        j["std_error"] = est.std_error;
        out.stream() << j.dump(2) << '\n';
    } else {
        write_csv_header(out.stream(), c);
        out.stream() << "L,trials,hits,empirical,bound,std_error\n"
                     << L << ',' << est.trials << ',' << est.hits << ',' << fmt(est.empirical) << ','
                     << fmt(est.bound) << ',' << fmt(est.std_error) << '\n';
    }
    return kExitOk;
}

int experiment_posterior(RunConfig& c, const InstanceParams& p) {
    const GeneratedInstance inst = generate(p, c.seed);
    ArcOracle oracle(inst.graph, Budget::of(c.budget < 0 ? static_cast<std::size_t>(2 * p.n)
                                                         : static_cast<std::size_t>(c.budget)),
                     derive_seed(c.seed, 2));
    oracle.cover_all();
    Rng rng(derive_seed(c.seed, 1));
    portcount_strategy(oracle, p, rng);
    const SplitPosterior post = posterior_splits(oracle.transcript(), p);
    Output out(c.out);
    std::ostream& summary = out.to_stdout() ? std::cerr : std::cout;
    summary << "queries=" << oracle.query_count() << " true_split_posterior="
            << fmt(post.of(inst.sigma.split)) << " splits=" << post.splits.size() << '\n';
    if (c.format == "json") {
        Json j;
        j["config"] = config_json(c);
        j["true_split"] = to_json(inst.sigma.split);
        j["queries"] = oracle.query_count();
        j["posterior"] = to_json(post);
        out.stream() << j.dump(2) << '\n';
    } else {
        write_csv_header(out.stream(), c);
        out.stream() << "split,probability\n";
        for (std::size_t i = 0; i < post.splits.size(); ++i) {
            std::string name;
            for (int x : post.splits[i]) name += (name.empty() ? "" : " ") + std::to_string(x);
            out.stream() << name << ',' << fmt(post.probability[i]) << '\n';
        }
    }
    return kExitOk;
}

int cmd_experiment(RunConfig& c) {
    const InstanceParams p = resolve_params(c);
    if (c.trials < 1) throw UsageError("--trials must be at least 1");
    if (c.mode == "curve") return experiment_curve(c, p);
    if (c.mode == "multiplicity") return experiment_multiplicity(c, p);
    if (c.mode == "posterior") return experiment_posterior(c, p);
    throw UsageError("unknown experiment mode '" + c.mode + "' (curve, multiplicity, posterior)");
}

struct Check {
    std::string name;
    bool pass;
    std::string measured;
    std::string expected;
};

int cmd_verify(RunConfig& c) {
    std::vector<Check> checks;
    if (!c.graph.empty()) {
        std::ifstream in(c.graph, std::ios::binary);
        if (!in) throw UsageError("cannot open graph file " + c.graph);
        try {
            const LabeledMultigraph g = read_graph(in);
            const bool ok = ports_consistent(g);
            checks.push_back({"graph-ports", ok, ok ? "consistent" : "inconsistent", "consistent"});
            const PprVector pi = exact_ppr(g, c.source, c.params.alpha);
            const double dev = std::abs(total_mass(pi) - 1.0);
            checks.push_back({"graph-normalization", dev <= c.tol, fmt(dev), "<= " + fmt(c.tol)});
        } catch (const Error& e) {
            checks.push_back({"graph-ports", false, e.what(), "consistent"});
        }
    } else {
        const InstanceParams p = resolve_params(c);
        const GeneratedInstance inst = generate(p, c.seed);
        InstanceParams bare = p;
        const LabeledMultigraph unpadded = build_instance(bare, inst.sigma);
        for (bool padded : {false, true}) {
            if (padded && p.r == 0) continue;
            const LabeledMultigraph& g = padded ? inst.graph : unpadded;
            const PprVector pi = exact_ppr(g, 1, p.alpha);
            const PprVector cf = closed_form_vector(p, inst.sigma.split, padded);
            double worst = 0.0;
            for (std::size_t v = 1; v < pi.size(); ++v) worst = std::max(worst, std::abs(pi[v] - cf[v]));
            const std::string suffix = padded ? "-padded" : "";
            checks.push_back({"closed-form" + suffix, worst <= c.tol, fmt(worst), "<= " + fmt(c.tol)});
            const double dev = std::abs(total_mass(pi) - 1.0);
            checks.push_back({"normalization" + suffix, dev <= c.tol, fmt(dev), "<= " + fmt(c.tol)});
        }
        checks.push_back({"degree-template", satisfies_degree_template(inst.graph, p, inst.sigma.split, true),
                          "audit", "pass"});
        {
            const int L = static_cast<int>(std::max<std::size_t>(multiplicity(inst.graph), 1));
            Rng rng(derive_seed(c.seed, 3));
            const LiftSpec spec = random_spec(inst.graph, L, rng);
            const double err = lift_transform_error(inst.graph, spec, 1, p.alpha);
            checks.push_back({"lift-transform", err <= c.tol, fmt(err), "<= " + fmt(c.tol)});
        }
        if (2 * p.n <= kMaxEnumeratedX) {
            const InstanceLayout layout(p);
            FrequencyConfig cfg;
            cfg.samples = std::max<std::size_t>(c.trials, 1);
            cfg.seed = derive_seed(c.seed, 4);
            cfg.threads = c.threads;
            const auto rep = frequency_vs_formula(p, {AdjInQuery{layout.x(1), 1}}, cfg);
            const bool ok = rep.max_abs_z < 4.0 && rep.unobserved_mass < 1e-9;
            checks.push_back({"response-frequency", ok, "max|z|=" + fmt(rep.max_abs_z), "< 4"});
        }
    }
    bool all = true;
    Output out(c.out);
    if (c.format == "json") {
        Json j;
        j["config"] = config_json(c);
        Json arr = Json::array();
        for (const auto& ch : checks) {
            arr.push_back({{"check", ch.name}, {"pass", ch.pass}, {"measured", ch.measured},
                           {"expected", ch.expected}});
            all = all && ch.pass;
        }
        j["checks"] = arr;
        j["pass"] = all;
        out.stream() << j.dump(2) << '\n';
    } else {
        out.stream() << "# config " << config_json(c).dump() << '\n';
        for (const auto& ch : checks) {
            out.stream() << (ch.pass ? "PASS " : "FAIL ") << ch.name << " measured=" << ch.measured
                         << " expected " << ch.expected << '\n';
            all = all && ch.pass;
        }
    }
    return all ? kExitOk : kExitCheckFailed;
}

void add_instance_options(CLI::App* sub, RunConfig& c) {
    sub->add_option("--n", c.params.n, "group size n")->capture_default_str();
    sub->add_option("--D", c.params.D, "heavy in-degree D")->capture_default_str();
    sub->add_option("--d", c.params.d, "degree gap d")->capture_default_str();
    sub->add_option("--r", c.params.r, "padding size r")->capture_default_str();
    sub->add_option("--alpha", c.params.alpha, "decay factor")->capture_default_str();
    sub->add_option("--eps", c.errors.eps, "additive error (size rule 'additive')")->capture_default_str();
    sub->add_option("--delta", c.errors.delta, "relative threshold (size rule 'relative')")->capture_default_str();
    sub->add_option("--c", c.errors.c, "relative error bound")->capture_default_str();
    sub->add_option("--beta", c.errors.beta, "exponent constant in (0,1)")->capture_default_str();
    sub->add_option("--size-rule", c.size_rule, "manual | additive | relative")->capture_default_str();
    sub->add_option("--n0", c.n0, "node count for the size rules");
    sub->add_option("--m0", c.m0, "edge count for the size rules");
    sub->add_option("--seed", c.seed, "master seed")->required();
    sub->add_option("--out", c.out, "output path (default stdout)");
    sub->add_option("--format", c.format, "csv | json")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    sub->add_option("--threads", c.threads, "worker threads (0 = all cores)")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Personalized PageRank lower-bound laboratory"};
    app.require_subcommand(1);
    RunConfig c;

    auto* gen = app.add_subcommand("generate", "sample an instance and write it in graph text format");
    add_instance_options(gen, c);
    gen->add_option("--meta", c.meta, "metadata JSON path (default <out>.meta.json)");

    auto* ppr = app.add_subcommand("ppr", "exact PPR vector of an instance or graph file");
    add_instance_options(ppr, c);
    ppr->add_option("--graph", c.graph, "graph file instead of a generated instance");
    ppr->add_option("--source", c.source, "source node")->capture_default_str();
    ppr->add_option("--tol", c.tol, "solver tolerance")->capture_default_str();

    auto* est = app.add_subcommand("estimate", "run an estimator through the query oracle");
    add_instance_options(est, c);
    est->add_option("--graph", c.graph, "graph file instead of a generated instance");
    est->add_option("--estimator", c.estimator, "mc | fp | bp | fora")->capture_default_str();
    est->add_option("--source", c.source, "source node")->capture_default_str();
    est->add_option("--target", c.target, "target node for bp")->capture_default_str();
    est->add_option("--budget", c.budget, "query budget (-1 = unlimited)")->capture_default_str();
    est->add_option("--r-max", c.r_max, "push threshold")->capture_default_str();
    est->add_option("--walks", c.walks, "walk count (mc) or walk total (fora)")->capture_default_str();

    auto* lift = app.add_subcommand("lift-check", "check the lift decay transform on an instance");
    add_instance_options(lift, c);
    lift->add_option("--L", c.L, "lift size (default: multiplicity)");
    lift->add_option("--tol", c.tol, "tolerance")->capture_default_str();

    auto* exp = app.add_subcommand("experiment", "success curves, multiplicity tails, posteriors");
    add_instance_options(exp, c);
    exp->add_option("--mode", c.mode, "curve | multiplicity | posterior")->capture_default_str();
    exp->add_option("--trials", c.trials, "independent trials")->capture_default_str();
    exp->add_option("--gamma-grid", c.gamma_grid, "comma-separated budget ratios")->capture_default_str();
    exp->add_option("--strategy", c.strategy, "mc | portcount")->capture_default_str();
    exp->add_option("--budget", c.budget, "query budget for posterior mode (-1 = 2n)")->capture_default_str();
    exp->add_option("--L", c.L, "multiplicity level");

    auto* ver = app.add_subcommand("verify", "run the invariant checks and report each one");
    add_instance_options(ver, c);
    ver->add_option("--graph", c.graph, "check a graph file instead of an instance");
    ver->add_option("--source", c.source, "source node for graph-file checks")->capture_default_str();
    ver->add_option("--tol", c.tol, "tolerance")->capture_default_str();
    ver->add_option("--trials", c.trials, "samples for the frequency check")->capture_default_str();
    c.trials = 200;

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (gen->parsed()) return c.command = "generate", cmd_generate(c);
        if (ppr->parsed()) return c.command = "ppr", cmd_ppr(c);
        if (est->parsed()) return c.command = "estimate", cmd_estimate(c);
        if (lift->parsed()) return c.command = "lift-check", cmd_lift_check(c);
        if (exp->parsed()) return c.command = "experiment", cmd_experiment(c);
        if (ver->parsed()) {
            if (c.trials == 200) c.trials = 20'000;
            return c.command = "verify", cmd_verify(c);
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const InfeasibleParams& e) {
        std::cerr << "infeasible parameters: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return kExitUsage;
    } catch (const EnumerationTooLarge& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitCheckFailed;
    }
    return kExitUsage;
}
