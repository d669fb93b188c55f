#include "timme/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace timme {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
    return out;
}

SpMatrix matrix_from_edges(int n, const std::set<Edge>& edges) {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(edges.size());
    for (const auto& [s, d] : edges) trips.emplace_back(s, d, 1.0);
    SpMatrix m(n, n);
    m.setFromTriplets(trips.begin(), trips.end());
    m.makeCompressed();
    return m;
}

}  // namespace

int NodeIdMap::index_of(const std::string& id) const {
    auto it = to_index.find(id);
    if (it == to_index.end()) throw std::out_of_range("unknown node id '" + id + "'");
    return it->second;
}

std::optional<int> NodeIdMap::find(const std::string& id) const {
    auto it = to_index.find(id);
    if (it == to_index.end()) return std::nullopt;
    return it->second;
}

std::size_t RelGraph::edge_count(int relation) const {
    return static_cast<std::size_t>(relations.at(static_cast<std::size_t>(relation)).nonZeros());
}

bool RelGraph::has_edge(int relation, int src, int dst) const {
    return relations.at(static_cast<std::size_t>(relation)).coeff(src, dst) != 0.0;
}

EdgeSet RelGraph::edges(int relation) const {
    const SpMatrix& m = relations.at(static_cast<std::size_t>(relation));
    EdgeSet out;
    out.reserve(static_cast<std::size_t>(m.nonZeros()));
    for (int k = 0; k < m.outerSize(); ++k)
        for (SpMatrix::InnerIterator it(m, k); it; ++it)
            out.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()));
    return out;
}

static NodeIdMap load_node_map(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open node map '" + path + "'");
    NodeIdMap map;
    std::vector<std::pair<std::string, int>> entries;
    std::string line;
    std::size_t line_no = 0;
    int max_index = -1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_tabs(line);
        if (fields.size() != 2)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected 'external_id<TAB>dense_index'");
        int idx = 0;
        try {
            idx = std::stoi(fields[1]);
        } catch (const std::exception&) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad index '" + fields[1] + "'");
        }
        if (idx < 0) throw std::runtime_error(path + ":" + std::to_string(line_no) + ": negative index");
        entries.emplace_back(fields[0], idx);
        max_index = std::max(max_index, idx);
    }
    if (entries.empty()) throw std::runtime_error("node map '" + path + "' is empty");
    map.to_external.assign(static_cast<std::size_t>(max_index + 1), "");
    for (const auto& [id, idx] : entries) {
        if (!map.to_external[static_cast<std::size_t>(idx)].empty())
            throw std::runtime_error("node map '" + path + "': duplicate index " + std::to_string(idx));
        if (map.to_index.count(id))
            throw std::runtime_error("node map '" + path + "': duplicate id '" + id + "'");
        map.to_external[static_cast<std::size_t>(idx)] = id;
        map.to_index.emplace(id, idx);
    }
    for (std::size_t i = 0; i < map.to_external.size(); ++i)
        if (map.to_external[i].empty())
            throw std::runtime_error("node map '" + path + "': index " + std::to_string(i) + " unassigned");
    return map;
}

RelGraph load_edge_lists(const std::vector<std::string>& paths,
                         const std::string& node_map_path,
                         const std::string& seed_path,
                         std::vector<LoadStats>* stats) {
    RelGraph g;
    g.ids = load_node_map(node_map_path);
    g.num_nodes = g.ids.size();
    g.seed_flags.assign(static_cast<std::size_t>(g.num_nodes), 0);

    for (const std::string& path : paths) {
        std::ifstream is(path);
        if (!is) throw std::runtime_error("cannot open edge list '" + path + "'");
        std::set<Edge> edges;
        LoadStats st;
        st.path = path;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(is, line)) {
            ++line_no;
            if (line.empty()) continue;
            ++st.lines;
            auto fields = split_tabs(line);
            if (fields.size() != 2)
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": expected 'src<TAB>dst' (weighted edges are not accepted)");
            auto src = g.ids.find(fields[0]);
            if (!src)
                throw std::runtime_error(path + ":" + std::to_string(line_no) + ": unknown node id '" + fields[0] + "'");
            auto dst = g.ids.find(fields[1]);
            if (!dst)
                throw std::runtime_error(path + ":" + std::to_string(line_no) + ": unknown node id '" + fields[1] + "'");
            if (!edges.emplace(*src, *dst).second) ++st.duplicates;
        }
        if (edges.empty()) throw std::runtime_error("edge list '" + path + "' holds no edges");
        st.edges = edges.size();
        if (stats) stats->push_back(st);
        g.relations.push_back(matrix_from_edges(g.num_nodes, edges));
        // relation name = file stem
        std::string name = path;
        if (auto slash = name.find_last_of('/'); slash != std::string::npos) name = name.substr(slash + 1);
        if (auto dot = name.find_last_of('.'); dot != std::string::npos && dot > 0) name = name.substr(0, dot);
        g.relation_names.push_back(name);
    }
    // Relation names must be unique; fall back to positional names on clash.
    {
        std::set<std::string> seen;
        for (std::size_t r = 0; r < g.relation_names.size(); ++r)
            if (!seen.insert(g.relation_names[r]).second)
                g.relation_names[r] += "_" + std::to_string(r);
    }

    if (!seed_path.empty()) {
        std::ifstream is(seed_path);
        if (!is) throw std::runtime_error("cannot open seed file '" + seed_path + "'");
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(is, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            auto idx = g.ids.find(line);
            if (!idx)
                throw std::runtime_error(seed_path + ":" + std::to_string(line_no) + ": unknown node id '" + line + "'");
            g.seed_flags[static_cast<std::size_t>(*idx)] = 1;
        }
    }
    return g;
}

RelGraph make_graph(int num_nodes, const std::vector<EdgeSet>& relations,
                    std::vector<std::string> relation_names) {
    RelGraph g;
    g.num_nodes = num_nodes;
    g.seed_flags.assign(static_cast<std::size_t>(num_nodes), 0);
    for (std::size_t r = 0; r < relations.size(); ++r) {
        std::set<Edge> edges;
        for (const auto& [s, d] : relations[r]) {
            if (s < 0 || s >= num_nodes || d < 0 || d >= num_nodes)
                throw std::out_of_range("make_graph: edge endpoint out of range");
            edges.emplace(s, d);
        }
        g.relations.push_back(matrix_from_edges(num_nodes, edges));
        g.relation_names.push_back(r < relation_names.size() ? relation_names[r]
                                                             : "rel" + std::to_string(r));
    }
    g.ids.to_external.reserve(static_cast<std::size_t>(num_nodes));
    for (int i = 0; i < num_nodes; ++i) {
        std::string id = "n" + std::to_string(i);
        g.ids.to_external.push_back(id);
        g.ids.to_index.emplace(id, i);
    }
    return g;
}

std::vector<SpMatrix> augment_relations(const RelGraph& g) {
    std::vector<SpMatrix> out;
    out.reserve(static_cast<std::size_t>(2 * g.num_relations() + 1));
    for (const SpMatrix& a : g.relations) out.push_back(a);
    for (const SpMatrix& a : g.relations) {
        SpMatrix t = SpMatrix(a.transpose());
        t.makeCompressed();
        out.push_back(std::move(t));
    }
    SpMatrix identity(g.num_nodes, g.num_nodes);
    identity.setIdentity();
    out.push_back(std::move(identity));
    return out;
}

std::vector<RelationTag> augmented_tags(int num_relations) {
    std::vector<RelationTag> tags;
    for (int r = 0; r < num_relations; ++r) tags.push_back({RelationKind::Forward, r});
    for (int r = 0; r < num_relations; ++r) tags.push_back({RelationKind::Reverse, r});
    tags.push_back({RelationKind::Identity, -1});
    return tags;
}

SpMatrix normalize_adjacency(const SpMatrix& raw) {
    if (raw.rows() != raw.cols())
        throw std::invalid_argument("normalize_adjacency: matrix must be square");
    const int n = static_cast<int>(raw.rows());

    SpMatrix with_loops = raw;
    SpMatrix identity(n, n);
    identity.setIdentity();
    with_loops = with_loops + identity;
    with_loops.makeCompressed();

    Eigen::VectorXd inv_sqrt_deg(n);
    for (int i = 0; i < n; ++i) {
        double d = with_loops.row(i).sum();
        inv_sqrt_deg(i) = 1.0 / std::sqrt(d);  // self-loop keeps d >= 1
    }

    SpMatrix out = with_loops;
    for (int k = 0; k < out.outerSize(); ++k)
        for (SpMatrix::InnerIterator it(out, k); it; ++it)
            it.valueRef() = it.value() * inv_sqrt_deg(it.row()) * inv_sqrt_deg(it.col());
    return out;
}

NormalizedRelationSet build_normalized_set(const RelGraph& g) {
    NormalizedRelationSet set;
    for (SpMatrix& raw : augment_relations(g)) set.matrices.push_back(normalize_adjacency(raw));
    set.tags = augmented_tags(g.num_relations());
    return set;
}

RelGraph remove_links(const RelGraph& g, const std::vector<EdgeSet>& holdout, RemoveStats* stats) {
    std::set<Edge> pairs;
    RemoveStats local;
    for (std::size_t r = 0; r < holdout.size(); ++r) {
        for (const Edge& e : holdout[r]) {
            pairs.insert(e);
            bool present = r < static_cast<std::size_t>(g.num_relations()) &&
                           g.has_edge(static_cast<int>(r), e.first, e.second);
            if (!present) ++local.missing;
        }
    }

    RelGraph out = g;
    for (std::size_t r = 0; r < out.relations.size(); ++r) {
        std::set<Edge> kept;
        for (const Edge& e : g.edges(static_cast<int>(r))) {
            if (pairs.count(e)) {
                ++local.removed;
            } else {
                kept.insert(e);
            }
        }
        out.relations[r] = matrix_from_edges(g.num_nodes, kept);
    }
    if (stats) *stats = local;
    return out;
}

ThresholdRange ThresholdRange::parse(const std::string& text) {
    auto parse_bound = [&](const std::string& s) -> std::uint64_t {
        if (s == "inf" || s == "INF" || s == "infinity") return kInfinity;
        std::size_t pos = 0;
        unsigned long long v = std::stoull(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("bad threshold bound '" + s + "'");
        return static_cast<std::uint64_t>(v);
    };
    std::string s = text;
    s.erase(std::remove_if(s.begin(), s.end(), [](char c) { return c == ' '; }), s.end());
    if (s.size() >= 2 && s.front() == '{' && s.back() == '}') {
        std::uint64_t v = parse_bound(s.substr(1, s.size() - 2));
        if (v == kInfinity) return ThresholdRange{kInfinity, kInfinity};
        return ThresholdRange{v, v + 1};
    }
    if (s.size() >= 2 && s.front() == '[' && s.back() == ')') {
        std::string body = s.substr(1, s.size() - 2);
        auto comma = body.find(',');
        if (comma == std::string::npos)
            throw std::invalid_argument("threshold range '" + text + "' needs two bounds");
        return ThresholdRange{parse_bound(body.substr(0, comma)), parse_bound(body.substr(comma + 1))};
    }
    throw std::invalid_argument("cannot parse threshold range '" + text + "' (use \"[lo,hi)\" or \"{inf}\")");
}

SubgroupResult filter_subgroup(const RelGraph& g,
                               const std::unordered_map<int, NodeCounts>& counts,
                               const ThresholdRange& range) {
    std::vector<int> kept;
    for (int i = 0; i < g.num_nodes; ++i) {
        if (g.seed_flags[static_cast<std::size_t>(i)]) {
            kept.push_back(i);
            continue;
        }
        auto it = counts.find(i);
        if (it == counts.end())
            throw std::runtime_error("filter_subgroup: no counts for non-seed node '" +
                                     g.ids.to_external[static_cast<std::size_t>(i)] + "'");
        std::uint64_t t = std::max(it->second.followed_by, it->second.following);
        if (range.contains(t)) kept.push_back(i);
    }
    if (kept.empty()) throw std::runtime_error("filter_subgroup: empty result set");

    std::vector<int> new_index(static_cast<std::size_t>(g.num_nodes), -1);
    for (std::size_t k = 0; k < kept.size(); ++k) new_index[static_cast<std::size_t>(kept[k])] = static_cast<int>(k);

    RelGraph out;
    out.num_nodes = static_cast<int>(kept.size());
    out.relation_names = g.relation_names;
    out.seed_flags.resize(kept.size());
    for (std::size_t k = 0; k < kept.size(); ++k) {
        out.seed_flags[k] = g.seed_flags[static_cast<std::size_t>(kept[k])];
        const std::string& id = g.ids.to_external[static_cast<std::size_t>(kept[k])];
        out.ids.to_external.push_back(id);
        out.ids.to_index.emplace(id, static_cast<int>(k));
    }
    for (int r = 0; r < g.num_relations(); ++r) {
        std::set<Edge> edges;
        for (const Edge& e : g.edges(r)) {
            int s = new_index[static_cast<std::size_t>(e.first)];
            int d = new_index[static_cast<std::size_t>(e.second)];
            if (s >= 0 && d >= 0) edges.emplace(s, d);
        }
        out.relations.push_back(matrix_from_edges(out.num_nodes, edges));
    }
    return SubgroupResult{std::move(kept), std::move(out)};
}

}  // namespace timme
