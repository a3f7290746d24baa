#pragma once

#include <stdexcept>
#include <string>

namespace windcf {

// Bad or missing input data, config files, or model files.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Internal optimization failure (not model infeasibility, which is a
// regular result status).
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace windcf
