#include "cirld/csv.hpp"

#include <stdexcept>

namespace cirld {

CsvWriter::CsvWriter(const std::string& path, const std::string& manifest_hash,
                     const std::vector<std::string>& header)
    : path_(path), out_(path, std::ios::binary), n_cols_(header.size()) {
    if (!out_) throw std::runtime_error("cannot open output file '" + path + "'");
    out_ << "# manifest " << manifest_hash << "\n";
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << "\n";
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != n_cols_) throw std::runtime_error("csv row width mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
}

}  // namespace cirld
