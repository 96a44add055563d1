#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pprlab/estimators.hpp"
#include "pprlab/experiments.hpp"
#include "pprlab/instance.hpp"
#include "pprlab/oracle.hpp"

namespace pprlab {

using Json = nlohmann::ordered_json;

inline Json to_json(const Query& q) {
    return std::visit(
        [](const auto& v) -> Json {
            using Q = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<Q, JumpQuery>) {
                return {{"op", "JUMP"}};
            } else if constexpr (std::is_same_v<Q, InDegQuery>) {
                return {{"op", "INDEG"}, {"v", v.v}};
            } else if constexpr (std::is_same_v<Q, OutDegQuery>) {
                return {{"op", "OUTDEG"}, {"v", v.v}};
            } else if constexpr (std::is_same_v<Q, AdjInQuery>) {
                return {{"op", "ADJ_IN"}, {"v", v.v}, {"k", v.k}};
            } else {
                return {{"op", "ADJ_OUT"}, {"v", v.v}, {"k", v.k}};
            }
        },
        q);
}

inline Json to_json(const Response& r) {
    return std::visit(
        [](const auto& v) -> Json {
            using R = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<R, NodeResponse>) {
                return {{"node", v.v}};
            } else if constexpr (std::is_same_v<R, DegreeResponse>) {
                return {{"degree", v.degree}};
            } else if constexpr (std::is_same_v<R, PortResponse>) {
                return {{"node", v.node}, {"port", v.port}};
            } else {
                return {{"absent", true}};
            }
        },
        r);
}

/// One line per event: {"t":i,"q":{...},"r":{...}}, t counting from 1.
inline void write_transcript_jsonl(std::ostream& os, const Transcript& transcript) {
    for (std::size_t t = 0; t < transcript.size(); ++t) {
        Json line;
        line["t"] = t + 1;
        line["q"] = to_json(transcript[t].query);
        line["r"] = to_json(transcript[t].response);
        os << line.dump() << '\n';
    }
}

inline Json to_json(const InstanceParams& p) {
    return {{"n", p.n}, {"D", p.D}, {"d", p.d}, {"r", p.r}, {"alpha", p.alpha}};
}

inline Json to_json(const Split& split) { return Json(std::vector<int>(split)); }

/// Estimator result record; the estimate is listed as [node, value] pairs
/// for nonzero entries.
inline Json estimate_record(const std::string& estimator, const PprVector& estimate,
                            std::size_t queries, std::size_t walks, bool complete) {
    Json entries = Json::array();
    for (std::size_t v = 1; v < estimate.size(); ++v) {
        if (estimate[v] != 0.0) entries.push_back(Json::array({v, estimate[v]}));
    }
    return {{"estimator", estimator},
            {"queries", queries},
            {"walks", walks},
            {"complete", complete},
            {"estimate", entries}};
}

inline Json to_json(const SplitPosterior& post) {
    Json rows = Json::array();
    for (std::size_t i = 0; i < post.splits.size(); ++i) {
        rows.push_back({{"split", to_json(post.splits[i])}, {"probability", post.probability[i]}});
    }
    return rows;
}

}  // namespace pprlab
