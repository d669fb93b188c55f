#include "timme/features.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace timme {

FeatureStore one_hot_features(int n) {
    if (n < 1) throw std::invalid_argument("one_hot_features: need at least one node");
    FeatureStore fs;
    fs.mode = FeatureMode::OneHot;
    fs.dim = n;
    return fs;
}

FeatureStore load_feature_file(const std::string& path, const NodeIdMap& ids, int n, int dim) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open feature file '" + path + "'");
    if (dim < 1) throw std::invalid_argument("feature dim must be positive");

    FeatureStore fs;
    fs.dim = dim;
    fs.fixed = Matrix::Zero(n, dim);
    fs.slot_of_row.assign(static_cast<std::size_t>(n), 0);
    std::vector<std::uint8_t> featured(static_cast<std::size_t>(n), 0);

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected 'node_id<TAB>values'");
        std::string id = line.substr(0, tab);
        auto idx = ids.find(id);
        if (!idx)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": unknown node id '" + id + "'");

        std::stringstream ss(line.substr(tab + 1));
        std::string tok;
        std::vector<double> values;
        while (std::getline(ss, tok, ',')) {
            try {
                values.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad value '" + tok + "'");
            }
        }
        if (static_cast<int>(values.size()) != dim)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected " +
                                     std::to_string(dim) + " values, got " + std::to_string(values.size()));
        for (int k = 0; k < dim; ++k) fs.fixed(*idx, k) = values[static_cast<std::size_t>(k)];
        featured[static_cast<std::size_t>(*idx)] = 1;
    }

    int next_slot = 0;
    for (int i = 0; i < n; ++i) {
        if (featured[static_cast<std::size_t>(i)]) {
            fs.slot_of_row[static_cast<std::size_t>(i)] = -1;
        } else {
            fs.slot_of_row[static_cast<std::size_t>(i)] = next_slot++;
        }
    }
    fs.trainable_rows = next_slot;
    fs.mode = next_slot == 0 ? FeatureMode::Fixed : FeatureMode::Mixed;
    return fs;
}

void register_feature_parameters(const FeatureStore& fs, ParameterStore& params, std::mt19937_64& rng) {
    if (fs.mode != FeatureMode::Mixed) return;
    params.add(FeatureStore::kParamName, uniform_rows_init(fs.trainable_rows, fs.dim, rng), true);
}

Var materialize(Tape& t, const FeatureStore& fs, const ParameterStore& params) {
    switch (fs.mode) {
        case FeatureMode::OneHot: {
            Matrix eye = Matrix::Identity(fs.dim, fs.dim);
            return t.constant(std::move(eye));
        }
        case FeatureMode::Fixed:
            return t.constant(fs.fixed);
        case FeatureMode::Mixed: {
            Var rows = params.use(t, FeatureStore::kParamName);
            return compose_rows(t, fs.fixed, fs.slot_of_row, rows);
        }
    }
    throw std::logic_error("materialize: unreachable");
}

}  // namespace timme
