#include "timme/manifest.hpp"

#include "timme/rng.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace timme {

std::string string_digest(const std::string& bytes) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

std::string file_digest(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("digest: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return string_digest(ss.str());
}

void write_manifest(RunManifest manifest, const std::string& path) {
    if (manifest.timestamp.empty()) {
        std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm tm{};
        gmtime_r(&now, &tm);
        char buf[32];
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
        manifest.timestamp = buf;
    }
    nlohmann::json j;
    j["command"] = manifest.command;
    j["seed"] = manifest.seed;
    j["config_digest"] = manifest.config_digest;
    nlohmann::json inputs = nlohmann::json::object();
    for (const auto& [p, d] : manifest.inputs) inputs[p] = d;
    j["inputs"] = inputs;
    j["artifacts"] = manifest.artifacts;
    j["timestamp"] = manifest.timestamp;

    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    os << j.dump(2) << "\n";
}

}  // namespace timme
