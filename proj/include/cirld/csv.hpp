#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

namespace cirld {

// Floats serialized with 17 significant digits so reruns are byte-identical.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::string& manifest_hash,
              const std::vector<std::string>& header);

    void row(const std::vector<std::string>& cells);
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ofstream out_;
    std::size_t n_cols_;
};

}  // namespace cirld
