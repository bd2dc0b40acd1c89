#ifndef GRAPHNNK_ERRORS_HPP
#define GRAPHNNK_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace graphnnk {

// Input/config problems (CLI exit code 2).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class LoadError : public InputError {
public:
    using InputError::InputError;
};

class FormatError : public InputError {
public:
    using InputError::InputError;
};

class InvalidInput : public InputError {
public:
    using InputError::InputError;
};

class StateError : public InputError {
public:
    using InputError::InputError;
};

class LookupError : public InputError {
public:
    using InputError::InputError;
};

// Runtime/numeric failures (CLI exit code 3).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public NumericError {
public:
    using NumericError::NumericError;
};

class SolverError : public NumericError {
public:
    SolverError(const std::string& what, std::vector<std::size_t> working_set)
        : NumericError(what), working_set_(std::move(working_set)) {}

    const std::vector<std::size_t>& working_set() const { return working_set_; }

private:
    std::vector<std::size_t> working_set_;
};

class ConvergenceError : public NumericError {
public:
    ConvergenceError(const std::string& what, double kkt_residual)
        : NumericError(what), kkt_residual_(kkt_residual) {}

    double kkt_residual() const { return kkt_residual_; }

private:
    double kkt_residual_;
};

// Raised by nnk_predict when no coefficient survives thresholding.
class EmptyActiveSetError : public NumericError {
public:
    using NumericError::NumericError;
};

}  // namespace graphnnk

#endif
