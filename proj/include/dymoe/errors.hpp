#pragma once

#include <stdexcept>
#include <string>

namespace dymoe {

// Base class for everything this library throws on purpose.
struct error : std::runtime_error {
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor/vector dimension disagreement; message names the offending shapes.
struct shape_error : error {
    explicit shape_error(const std::string& msg) : error(msg) {}
};

// Index or block out of its valid interval.
struct range_error : error {
    explicit range_error(const std::string& msg) : error(msg) {}
};

// Malformed or inconsistent input files / datasets.
struct data_error : error {
    explicit data_error(const std::string& msg) : error(msg) {}
};

// Bad key or value in a run configuration.
struct config_error : error {
    explicit config_error(const std::string& msg) : error(msg) {}
};

// A structural guarantee of the pipeline was violated.
struct invariant_error : error {
    explicit invariant_error(const std::string& msg) : error(msg) {}
};

}  // namespace dymoe
