#include "timme/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace timme {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

int to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        int x = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad integer for '" + key + "': '" + v + "'");
    }
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad number for '" + key + "': '" + v + "'");
    }
}

}  // namespace

void apply_config_entry(TrainConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "mode") {
        auto [mode, rel] = parse_mode(value);
        cfg.mode = mode;
        if (!rel.empty()) cfg.link_relation = rel;
    } else if (key == "link_relation") {
        cfg.link_relation = value;
    } else if (key == "epochs") {
        cfg.epochs = to_int(key, value);
    } else if (key == "learning_rate") {
        cfg.learning_rate = to_double(key, value);
    } else if (key == "lr_decay_factor") {
        cfg.lr_decay_factor = to_double(key, value);
    } else if (key == "lr_milestones") {
        cfg.lr_milestones.clear();
        for (const std::string& tok : split_list(value)) cfg.lr_milestones.push_back(to_int(key, tok));
    } else if (key == "link_batch") {
        cfg.link_batch = to_int(key, value);
    } else if (key == "negative_ratio") {
        cfg.negative_ratio = to_int(key, value);
    } else if (key == "patience") {
        cfg.patience = to_int(key, value);
    } else if (key == "seed") {
        try {
            cfg.seed = std::stoull(value);
        } catch (const std::exception&) {
            throw std::invalid_argument("config: bad seed '" + value + "'");
        }
    } else if (key == "hidden_dim") {
        cfg.hidden_dim = to_int(key, value);
    } else if (key == "embed_dim") {
        cfg.embed_dim = to_int(key, value);
    } else if (key == "dropout") {
        cfg.dropout = to_double(key, value);
    } else if (key == "edges") {
        cfg.edge_paths = split_list(value);
    } else if (key == "node_map") {
        cfg.node_map_path = value;
    } else if (key == "labels") {
        cfg.labels_path = value;
    } else if (key == "seeds") {
        cfg.seeds_path = value;
    } else if (key == "features") {
        cfg.features_path = value;
    } else if (key == "feature_dim") {
        cfg.feature_dim = to_int(key, value);
    } else if (key == "regions") {
        cfg.regions_path = value;
    } else if (key == "relation_names") {
        cfg.relation_names_override = split_list(value);
    } else if (key == "out_dir") {
        cfg.out_dir = value;
    } else {
        throw std::invalid_argument("config: unknown key '" + key + "'");
    }
}

TrainConfig load_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config '" + path + "'");
    TrainConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
        try {
            apply_config_entry(cfg, trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return cfg;
}

std::string canonical_config(const TrainConfig& cfg) {
    std::ostringstream os;
    os.precision(17);
    auto list = [](const std::vector<std::string>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
        return s;
    };
    std::string milestones;
    for (std::size_t i = 0; i < cfg.lr_milestones.size(); ++i)
        milestones += (i ? "," : "") + std::to_string(cfg.lr_milestones[i]);

    os << "dropout = " << cfg.dropout << "\n";
    os << "edges = " << list(cfg.edge_paths) << "\n";
    os << "embed_dim = " << cfg.embed_dim << "\n";
    os << "epochs = " << resolved_epochs(cfg) << "\n";
    os << "feature_dim = " << cfg.feature_dim << "\n";
    os << "features = " << cfg.features_path << "\n";
    os << "hidden_dim = " << cfg.hidden_dim << "\n";
    os << "labels = " << cfg.labels_path << "\n";
    os << "link_batch = " << cfg.link_batch << "\n";
    os << "link_relation = " << cfg.link_relation << "\n";
    os << "lr_decay_factor = " << cfg.lr_decay_factor << "\n";
    os << "lr_milestones = " << milestones << "\n";
    os << "learning_rate = " << cfg.learning_rate << "\n";
    os << "mode = " << to_string(cfg.mode) << "\n";
    os << "negative_ratio = " << cfg.negative_ratio << "\n";
    os << "node_map = " << cfg.node_map_path << "\n";
    os << "out_dir = " << cfg.out_dir << "\n";
    os << "patience = " << cfg.patience << "\n";
    os << "regions = " << cfg.regions_path << "\n";
    os << "relation_names = " << list(cfg.relation_names_override) << "\n";
    os << "seed = " << cfg.seed << "\n";
    os << "seeds = " << cfg.seeds_path << "\n";
    return os.str();
}

}  // namespace timme
