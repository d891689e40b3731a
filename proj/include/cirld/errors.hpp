#pragma once

#include <stdexcept>

namespace cirld {

struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace cirld
