#pragma once

#include <stdexcept>
#include <string>

#include "cirld/model.hpp"

namespace cirld {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Parses the flat key-value model config:
///
///   schema = 1
///   model.eta = 1.0
///   model.theta = 1.0
///   model.mu = 1.0, 2.0
///   model.q.base = 0.0, 1.0, 2.0, 0.0      # row-major, diagonal must be 0
///   model.q.slope = 0.0, 0.5, 0.0, 0.0
///   model.x_min = 1e-6                      # optional
///
/// '#' starts a comment. Unknown keys, duplicate keys, missing required keys,
/// wrong array lengths, and malformed numbers are all ConfigError with the
/// offending key and line number.
ModelSpec load_config(const std::string& path);

ModelSpec parse_config(const std::string& text, const std::string& origin);

}  // namespace cirld
