#include "timme/textio.hpp"

#include <fstream>
#include <stdexcept>

namespace timme {

namespace {

std::vector<std::string> tab_fields(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
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
    return out;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    return os;
}

}  // namespace

LabeledSet load_labels_file(const std::string& path, const NodeIdMap& ids) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open labels file '" + path + "'");
    LabeledSet out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto f = tab_fields(line);
        if (f.size() != 2)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected 'node_id<TAB>label'");
        auto idx = ids.find(f[0]);
        if (!idx)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": unknown node id '" + f[0] + "'");
        if (f[1] != "0" && f[1] != "1")
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": label must be 0 or 1, got '" + f[1] + "'");
        out.nodes.push_back(*idx);
        out.labels.push_back(f[1] == "1" ? 1 : 0);
    }
    return out;
}

std::vector<std::pair<int, std::string>> load_regions_file(const std::string& path,
                                                           const NodeIdMap& ids) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open region file '" + path + "'");
    std::vector<std::pair<int, std::string>> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto f = tab_fields(line);
        if (f.size() != 2)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected 'node_id<TAB>region'");
        auto idx = ids.find(f[0]);
        if (!idx) continue;
        out.emplace_back(*idx, f[1]);
    }
    return out;
}

std::unordered_map<int, NodeCounts> load_counts_file(const std::string& path, const NodeIdMap& ids) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open count file '" + path + "'");
    std::unordered_map<int, NodeCounts> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto f = tab_fields(line);
        if (f.size() != 3)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected 'node_id<TAB>t1<TAB>t2'");
        auto idx = ids.find(f[0]);
        if (!idx)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": unknown node id '" + f[0] + "'");
        try {
            out[*idx] = NodeCounts{std::stoull(f[1]), std::stoull(f[2])};
        } catch (const std::exception&) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad count");
        }
    }
    return out;
}

void write_predictions(const std::string& path, const NodeIdMap& ids, const Matrix& probs) {
    auto os = open_out(path);
    os.precision(17);
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        int label = probs(i, 1) > probs(i, 0) ? 1 : 0;
        os << ids.to_external[static_cast<std::size_t>(i)] << '\t' << probs(i, 0) << '\t'
           << probs(i, 1) << '\t' << label << '\n';
    }
}

void write_embeddings(const std::string& path, const NodeIdMap& ids, const Matrix& h) {
    auto os = open_out(path);
    os.precision(17);
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
        os << ids.to_external[static_cast<std::size_t>(i)] << '\t';
        for (Eigen::Index j = 0; j < h.cols(); ++j) {
            if (j) os << ',';
            os << h(i, j);
        }
        os << '\n';
    }
}

void write_node_map(const std::string& path, const NodeIdMap& ids) {
    auto os = open_out(path);
    for (std::size_t i = 0; i < ids.to_external.size(); ++i)
        os << ids.to_external[i] << '\t' << i << '\n';
}

void write_edge_list(const std::string& path, const RelGraph& g, int relation) {
    auto os = open_out(path);
    for (const Edge& e : g.edges(relation))
        os << g.ids.to_external[static_cast<std::size_t>(e.first)] << '\t'
           << g.ids.to_external[static_cast<std::size_t>(e.second)] << '\n';
}

void write_seed_file(const std::string& path, const RelGraph& g) {
    auto os = open_out(path);
    for (int i = 0; i < g.num_nodes; ++i)
        if (g.seed_flags[static_cast<std::size_t>(i)])
            os << g.ids.to_external[static_cast<std::size_t>(i)] << '\n';
}

}  // namespace timme
