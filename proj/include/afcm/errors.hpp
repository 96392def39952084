#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace afcm {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shapes that cannot combine (state length vs matrix size, etc.).
struct DimensionError : Error {
    using Error::Error;
};

// A state stopped being finite; step is the iteration index where it happened.
struct DivergenceError : Error {
    std::size_t step;
    DivergenceError(const std::string& msg, std::size_t at) : Error(msg), step(at) {}
};

// A solver exhausted its budget; carries the best residual norm it reached.
struct ConvergenceError : Error {
    double best_residual;
    ConvergenceError(const std::string& msg, double best)
        : Error(msg), best_residual(best) {}
};

struct PreconditionError : Error {
    using Error::Error;
};

// Scenario-file violation; field names the offending entry.
struct SchemaError : Error {
    std::string field;
    SchemaError(std::string f, const std::string& msg)
        : Error(msg), field(std::move(f)) {}
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace afcm
