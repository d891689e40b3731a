#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cirld {

inline constexpr const char* kVersion = "0.1.0";

// FNV-1a over the run identity (config bytes, command line, seed, version).
// Deliberately excludes timestamps so the hash, and therefore every CSV that
// embeds it, is reproducible.
std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

struct RunManifest {
    std::string command;            // full invocation, for the record
    std::string canonical_command;  // without --out-dir/--threads/--config/--seed
    std::string config_path;
    std::string config_bytes;
    std::uint64_t seed = 0;
    std::vector<std::string> outputs;
    std::string started_utc;
    std::string finished_utc;

    std::string hash() const;
    void write(const std::string& path) const;
};

}  // namespace cirld
