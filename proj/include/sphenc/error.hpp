#pragma once

#include <stdexcept>
#include <string>

namespace sphenc {

// Bad configuration values, mismatched table shapes, out-of-range levels.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Contract violations in the geometric kernels (should not happen for valid inputs).
struct geometry_error : std::runtime_error {
    explicit geometry_error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or truncated files, failed reads/writes.
struct io_error : std::runtime_error {
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sphenc
