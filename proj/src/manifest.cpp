#include "cirld/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace cirld {

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string RunManifest::hash() const {
    std::uint64_t h = fnv1a(config_bytes);
    h = fnv1a(canonical_command, h);
    h = fnv1a(std::to_string(seed), h);
    h = fnv1a(kVersion, h);
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void RunManifest::write(const std::string& path) const {
    nlohmann::json j;
    j["schema"] = 1;
    j["version"] = kVersion;
    j["hash"] = hash();
    j["command"] = command;
    j["canonical_command"] = canonical_command;
    j["config_path"] = config_path;
    j["seed"] = seed;
    j["outputs"] = outputs;
    j["started_utc"] = started_utc;
    j["finished_utc"] = finished_utc;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write manifest '" + path + "'");
    out << j.dump(2) << "\n";
}

}  // namespace cirld
