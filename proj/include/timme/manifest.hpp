#ifndef TIMME_MANIFEST_HPP
#define TIMME_MANIFEST_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace timme {

/// FNV-1a digest of a file's bytes, as 16 hex digits.
std::string file_digest(const std::string& path);
std::string string_digest(const std::string& bytes);

/// Record of one command run: what went in, what came out. Digests are stable
/// for identical inputs; the timestamp is the only run-varying field.
struct RunManifest {
    std::string command;
    std::uint64_t seed{0};
    std::string config_digest;
    std::vector<std::pair<std::string, std::string>> inputs;  // path, digest
    std::vector<std::string> artifacts;
    std::string timestamp;  // UTC ISO-8601, filled by write_manifest
};

void write_manifest(RunManifest manifest, const std::string& path);

}  // namespace timme

#endif  // TIMME_MANIFEST_HPP
