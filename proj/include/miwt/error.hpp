#pragma once

#include <stdexcept>
#include <string>

namespace miwt {

/// Malformed or missing input: files, configs, user-supplied parameters.
/// The CLI maps this to exit code 2.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical failure during a computation (rank deficiency, degenerate
/// statistics, factorization failure). The CLI maps this to exit code 1.
class ComputeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace miwt
