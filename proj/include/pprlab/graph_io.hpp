#pragma once

// Text format: first line "N M", then M lines "u u_out_port v v_in_port",
// all 1-based decimal, LF-terminated. Edges are written in (u, u_out_port)
// order, which makes serialize(deserialize(text)) == text for canonical text.

#include <charconv>
#include <cstdint>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pprlab/graph.hpp"

namespace pprlab {

inline std::string serialize(const LabeledMultigraph& g) {
    std::string out;
    out.reserve(16 + g.edge_count() * 24);
    out += std::to_string(g.node_count());
    out += ' ';
    out += std::to_string(g.edge_count());
    out += '\n';
    for (const EdgeRef& e : g.edges()) {
        out += std::to_string(e.source);
        out += ' ';
        out += std::to_string(e.source_port);
        out += ' ';
        out += std::to_string(e.target);
        out += ' ';
        out += std::to_string(e.target_port);
        out += '\n';
    }
    return out;
}

namespace detail {

inline std::vector<std::uint64_t> parse_fields(std::string_view line, std::size_t expected,
                                               std::size_t line_no) {
    std::vector<std::uint64_t> fields;
    std::size_t pos = 0;
    while (pos < line.size()) {
        while (pos < line.size() && line[pos] == ' ') ++pos;
        if (pos >= line.size()) break;
        std::uint64_t value = 0;
        const char* first = line.data() + pos;
        const char* last = line.data() + line.size();
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc{} || (ptr != last && *ptr != ' ')) {
            throw ParseError(line_no, "expected non-negative integer in \"" + std::string(line) +
                                          "\"");
        }
        fields.push_back(value);
        pos = static_cast<std::size_t>(ptr - line.data());
    }
    if (fields.size() != expected) {
        throw ParseError(line_no, "expected " + std::to_string(expected) + " fields, got " +
                                      std::to_string(fields.size()));
    }
    return fields;
}

}  // namespace detail

/// Parses the text format. Lexical problems raise ParseError with the
/// offending line number; port-table inconsistencies raise InvalidGraph.
inline LabeledMultigraph deserialize(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        const std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    if (lines.empty()) throw ParseError(1, "missing header");

    const auto header = detail::parse_fields(lines[0], 2, 1);
    const std::uint64_t n = header[0];
    const std::uint64_t m = header[1];
    if (lines.size() - 1 != m) {
        throw ParseError(lines.size() < m + 1 ? lines.size() + 1 : m + 2,
                         "header declares " + std::to_string(m) + " edges, found " +
                             std::to_string(lines.size() - 1));
    }

    GraphBuilder builder(n);
    builder.reserve_edges(m);
    for (std::size_t i = 1; i <= m; ++i) {
        const auto f = detail::parse_fields(lines[i], 4, i + 1);
        if (f[0] < 1 || f[0] > n || f[2] < 1 || f[2] > n) {
            throw ParseError(i + 1, "node label out of range 1.." + std::to_string(n));
        }
        if (f[1] < 1 || f[3] < 1) throw ParseError(i + 1, "ports are 1-based");
        if (f[1] > m || f[3] > m) throw ParseError(i + 1, "port exceeds edge count");
        builder.connect_at(static_cast<NodeId>(f[0]), static_cast<Port>(f[1]),
                           static_cast<NodeId>(f[2]), static_cast<Port>(f[3]));
    }
    return std::move(builder).freeze();
}

inline LabeledMultigraph read_graph(std::istream& in) {
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return deserialize(buffer.str());
}

}  // namespace pprlab
