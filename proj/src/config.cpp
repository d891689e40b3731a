#include "cirld/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace cirld {

namespace {

struct Entry {
    std::string value;
    int line = 0;
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& what) {
    throw ConfigError(origin + ":" + std::to_string(line) + ": " + what);
}

double parse_number(const std::string& origin, int line, const std::string& key,
                    const std::string& tok) {
    const std::string t = trim(tok);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(v))
        fail(origin, line, key + ": malformed number '" + t + "'");
    return v;
}

std::vector<double> parse_array(const std::string& origin, int line, const std::string& key,
                                const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(parse_number(origin, line, key, tok));
    if (out.empty()) fail(origin, line, key + ": empty array");
    return out;
}

}  // namespace

ModelSpec parse_config(const std::string& text, const std::string& origin) {
    std::map<std::string, Entry> kv;
    {
        std::stringstream ss(text);
        std::string raw;
        int line = 0;
        while (std::getline(ss, raw)) {
            ++line;
            const auto hash = raw.find('#');
            if (hash != std::string::npos) raw.erase(hash);
            const std::string s = trim(raw);
            if (s.empty()) continue;
            const auto eq = s.find('=');
            if (eq == std::string::npos) fail(origin, line, "expected 'key = value'");
            const std::string key = trim(s.substr(0, eq));
            if (key.empty()) fail(origin, line, "empty key");
            if (kv.count(key)) fail(origin, line, "duplicate key '" + key + "'");
            kv[key] = Entry{trim(s.substr(eq + 1)), line};
        }
    }

    static const char* known[] = {"schema",       "model.eta",    "model.theta", "model.mu",
                                  "model.q.base", "model.q.slope", "model.x_min"};
    for (const auto& [key, entry] : kv) {
        bool found = false;
        for (const char* k : known) found = found || key == k;
        if (!found) fail(origin, entry.line, "unknown key '" + key + "'");
    }

    auto require = [&](const std::string& key) -> const Entry& {
        auto it = kv.find(key);
        if (it == kv.end()) throw ConfigError(origin + ": missing required key '" + key + "'");
        return it->second;
    };

    {
        const Entry& e = require("schema");
        if (trim(e.value) != "1") fail(origin, e.line, "schema: unsupported version '" + e.value + "'");
    }

    ModelSpec spec;
    {
        const Entry& e = require("model.eta");
        spec.eta = parse_number(origin, e.line, "model.eta", e.value);
    }
    {
        const Entry& e = require("model.theta");
        spec.theta = parse_number(origin, e.line, "model.theta", e.value);
    }
    {
        const Entry& e = require("model.mu");
        spec.mu = parse_array(origin, e.line, "model.mu", e.value);
    }
    const int n = spec.n_regimes();

    auto read_matrix = [&](const std::string& key) {
        const Entry& e = require(key);
        const auto vals = parse_array(origin, e.line, key, e.value);
        if (static_cast<int>(vals.size()) != n * n)
            fail(origin, e.line,
                 key + ": expected " + std::to_string(n * n) + " row-major entries, got " +
                     std::to_string(vals.size()));
        SquareMat m(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double v = vals[static_cast<std::size_t>(i) * n + j];
                if (i == j && v != 0.0)
                    fail(origin, e.line, key + ": diagonal entries are derived and must be 0");
                m(i, j) = v;
            }
        return m;
    };
    spec.q_field.base = read_matrix("model.q.base");
    spec.q_field.slope = read_matrix("model.q.slope");

    if (auto it = kv.find("model.x_min"); it != kv.end())
        spec.x_min = parse_number(origin, it->second.line, "model.x_min", it->second.value);
    return spec;
}

ModelSpec load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

}  // namespace cirld
