#include "algsmooth/ingest.hpp"

#include "algsmooth/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace algsmooth {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

bool blank_or_comment(const std::string& line) {
    const auto first = line.find_first_not_of(" \t\r");
    return first == std::string::npos || line[first] == '#';
}

std::vector<std::string> split_tokens(const std::string& line) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : line) {
        if (c == ',' || c == ' ' || c == '\t' || c == '\r') {
            if (!current.empty()) tokens.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

template <class T>
std::optional<T> parse_number(const std::string& token) {
    T value{};
    const char* first = token.data();
    const char* last = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return value;
}

}  // namespace

WeightedGraph load_edge_list(const std::filesystem::path& path, std::size_t min_nodes) {
    std::ifstream in = open_input(path);
    const std::string name = path.string();
    std::vector<Edge> edges;
    std::size_t n = min_nodes;
    std::string line;
    std::size_t line_no = 0;
    bool any = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank_or_comment(line)) continue;
        const auto tokens = split_tokens(line);
        if (tokens.size() != 2 && tokens.size() != 3) {
            throw ParseError(name, line_no, "expected 'i j' or 'i j w', got " +
                                                std::to_string(tokens.size()) + " tokens");
        }
        const auto i = parse_number<std::size_t>(tokens[0]);
        const auto j = parse_number<std::size_t>(tokens[1]);
        if (!i || !j) throw ParseError(name, line_no, "vertex index is not a non-negative integer");
        double w = 1.0;
        if (tokens.size() == 3) {
            const auto parsed = parse_number<double>(tokens[2]);
            if (!parsed) throw ParseError(name, line_no, "weight is not numeric");
            if (!(*parsed > 0.0)) throw ParseError(name, line_no, "weight must be positive");
            w = *parsed;
        }
        if (*i == *j) throw ParseError(name, line_no, "self loop");
        if (std::max(*i, *j) >= (std::size_t{1} << 40)) {
            throw ParseError(name, line_no, "vertex index out of range");
        }
        any = true;
        n = std::max(n, std::max(*i, *j) + 1);
        edges.push_back({*i, *j, w});
    }
    if (!any) throw ParseError(name, line_no, "edge list is empty");
    // Exact duplicates collapse inside build(); reversed duplicates too.
    return WeightedGraph::build(n, edges);
}

NodeFeatures load_features(const std::filesystem::path& path, std::size_t n) {
    std::ifstream in = open_input(path);
    const std::string name = path.string();
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank_or_comment(line)) continue;
        const auto tokens = split_tokens(line);
        std::vector<double> row;
        row.reserve(tokens.size());
        for (std::size_t c = 0; c < tokens.size(); ++c) {
            const auto v = parse_number<double>(tokens[c]);
            if (!v || !std::isfinite(*v)) {
                throw ParseError(name, line_no, "non-numeric token '" + tokens[c] +
                                                    "' in column " + std::to_string(c + 1));
            }
            row.push_back(*v);
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw ParseError(name, line_no, "row has " + std::to_string(row.size()) +
                                                " values, expected " +
                                                std::to_string(rows.front().size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.size() != n) {
        throw ParseError(name, line_no, "feature file has " + std::to_string(rows.size()) +
                                            " rows, graph has " + std::to_string(n) + " nodes");
    }
    const std::size_t d = rows.empty() ? 0 : rows.front().size();
    NodeFeatures x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < d; ++c) {
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
        }
    }
    return x;
}

std::vector<long> load_labels(const std::filesystem::path& path, std::size_t n) {
    std::ifstream in = open_input(path);
    const std::string name = path.string();
    std::vector<long> labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank_or_comment(line)) continue;
        const auto tokens = split_tokens(line);
        if (tokens.size() != 1) throw ParseError(name, line_no, "expected one label per line");
        const auto v = parse_number<long>(tokens[0]);
        if (!v) throw ParseError(name, line_no, "label is not an integer");
        labels.push_back(*v);
    }
    if (labels.size() != n) {
        throw ParseError(name, line_no, "label file has " + std::to_string(labels.size()) +
                                            " rows, graph has " + std::to_string(n) + " nodes");
    }
    return labels;
}

void write_edge_list(const std::filesystem::path& path, const WeightedGraph& g,
                     const std::string& header) {
    std::ofstream out = open_output(path);
    if (!header.empty()) out << "# " << header << '\n';
    out.precision(17);
    for (const Edge& e : g.edges()) {
        out << e.i << ' ' << e.j;
        if (e.weight != 1.0) out << ' ' << e.weight;
        out << '\n';
    }
}

void write_matrix(const std::filesystem::path& path, const NodeFeatures& x,
                  const std::string& metadata) {
    std::ofstream out = open_output(path);
    out << "# shape=" << x.rows() << 'x' << x.cols();
    if (!metadata.empty()) out << ' ' << metadata;
    out << '\n';
    char buf[32];
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
            if (c) out << ',';
            auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x(i, c));
            out.write(buf, ptr - buf);
        }
        out << '\n';
    }
}

NodeFeatures read_matrix(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    std::size_t rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (!blank_or_comment(line)) ++rows;
    }
    return load_features(path, rows);
}

SyntheticKind parse_synthetic_kind(const std::string& text) {
    if (text == "path") return SyntheticKind::Path;
    if (text == "ring") return SyntheticKind::Ring;
    if (text == "grid2d" || text == "grid") return SyntheticKind::Grid2d;
    if (text == "erdos-renyi" || text == "er") return SyntheticKind::ErdosRenyi;
    if (text == "sbm") return SyntheticKind::Sbm;
    throw std::invalid_argument("unknown synthetic graph kind '" + text + "'");
}

std::string to_string(SyntheticKind kind) {
    switch (kind) {
        case SyntheticKind::Path: return "path";
        case SyntheticKind::Ring: return "ring";
        case SyntheticKind::Grid2d: return "grid2d";
        case SyntheticKind::ErdosRenyi: return "erdos-renyi";
        case SyntheticKind::Sbm: return "sbm";
    }
    return "unknown";
}

void SyntheticSpec::validate() const {
    switch (kind) {
        case SyntheticKind::Path:
            if (size < 1) throw std::invalid_argument("path needs at least 1 node");
            break;
        case SyntheticKind::Ring:
            if (size < 3) throw std::invalid_argument("ring needs at least 3 nodes");
            break;
        case SyntheticKind::Grid2d:
            if (rows < 1 || cols < 1) throw std::invalid_argument("grid2d needs rows, cols >= 1");
            break;
        case SyntheticKind::ErdosRenyi:
            if (size < 1) throw std::invalid_argument("erdos-renyi needs at least 1 node");
            if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("edge probability must lie in (0, 1]");
            break;
        case SyntheticKind::Sbm:
            if (blocks < 1 || size < blocks) throw std::invalid_argument("sbm needs 1 <= blocks <= size");
            if (!(p_in > 0.0 && p_in <= 1.0) || !(p_out >= 0.0 && p_out <= 1.0)) {
                throw std::invalid_argument("sbm probabilities must lie in [0, 1]");
            }
            break;
    }
}

std::string SyntheticSpec::describe() const {
    std::ostringstream out;
    out.precision(17);
    out << to_string(kind);
    switch (kind) {
        case SyntheticKind::Path:
        case SyntheticKind::Ring: out << " size=" << size; break;
        case SyntheticKind::Grid2d: out << " rows=" << rows << " cols=" << cols; break;
        case SyntheticKind::ErdosRenyi: out << " size=" << size << " p=" << p << " seed=" << seed; break;
        case SyntheticKind::Sbm:
            out << " size=" << size << " blocks=" << blocks << " p_in=" << p_in
                << " p_out=" << p_out << " seed=" << seed;
            break;
    }
    return out.str();
}

std::vector<std::size_t> sbm_blocks(const SyntheticSpec& spec) {
    std::vector<std::size_t> block(spec.size);
    for (std::size_t i = 0; i < spec.size; ++i) block[i] = i * spec.blocks / spec.size;
    return block;
}

WeightedGraph generate_graph(const SyntheticSpec& spec) {
    spec.validate();
    std::vector<Edge> edges;
    switch (spec.kind) {
        case SyntheticKind::Path:
            for (std::size_t i = 0; i + 1 < spec.size; ++i) edges.push_back({i, i + 1, 1.0});
            return WeightedGraph::build(spec.size, edges);
        case SyntheticKind::Ring:
            for (std::size_t i = 0; i < spec.size; ++i) edges.push_back({i, (i + 1) % spec.size, 1.0});
            return WeightedGraph::build(spec.size, edges);
        case SyntheticKind::Grid2d:
            for (std::size_t r = 0; r < spec.rows; ++r) {
                for (std::size_t c = 0; c < spec.cols; ++c) {
                    const std::size_t v = r * spec.cols + c;
                    if (c + 1 < spec.cols) edges.push_back({v, v + 1, 1.0});
                    if (r + 1 < spec.rows) edges.push_back({v, v + spec.cols, 1.0});
                }
            }
            return WeightedGraph::build(spec.rows * spec.cols, edges);
        case SyntheticKind::ErdosRenyi:
        case SyntheticKind::Sbm: break;
    }

    const bool sbm = spec.kind == SyntheticKind::Sbm;
    const std::vector<std::size_t> block = sbm ? sbm_blocks(spec) : std::vector<std::size_t>{};
    for (std::size_t attempt = 0; attempt < spec.max_retries; ++attempt) {
        CounterRng rng(spec.seed, attempt);
        edges.clear();
        for (std::size_t i = 0; i < spec.size; ++i) {
            for (std::size_t j = i + 1; j < spec.size; ++j) {
                const double p = !sbm ? spec.p : (block[i] == block[j] ? spec.p_in : spec.p_out);
                if (rng.uniform() < p) edges.push_back({i, j, 1.0});
            }
        }
        WeightedGraph g = WeightedGraph::build(spec.size, edges);
        if (g.connected()) return g;
    }
    throw RetryExhaustedError("no connected " + spec.describe() + " graph after " +
                              std::to_string(spec.max_retries) + " attempts");
}

NodeFeatures random_features(std::size_t n, std::size_t d, std::uint64_t seed, double scale) {
    if (n < 1 || d < 1) throw std::invalid_argument("random_features: n and d must be positive");
    CounterRng rng(seed, 0xFEA7);
    NodeFeatures x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = scale * rng.normal();
    return x;
}

DatasetStats dataset_stats(const WeightedGraph& g, const NodeFeatures* features,
                           const std::vector<long>* labels) {
    DatasetStats stats;
    stats.nodes = g.size();
    stats.edges = g.edge_count();
    stats.components = g.components();
    if (features) stats.features = static_cast<std::size_t>(features->cols());
    if (labels) stats.classes = std::set<long>(labels->begin(), labels->end()).size();
    return stats;
}

}  // namespace algsmooth
