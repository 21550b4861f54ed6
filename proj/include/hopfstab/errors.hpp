#pragma once

#include <stdexcept>
#include <string>

namespace hopfstab {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// bad arguments: dimension mismatch, out-of-range scalars
class InputError : public Error {
public:
    using Error::Error;
};

// a model evaluator produced NaN/Inf
class EvaluationError : public Error {
public:
    using Error::Error;
};

// inconsistent system definition or config
class ConfigurationError : public Error {
public:
    using Error::Error;
};

class SolverError : public Error {
public:
    using Error::Error;
};

// singular system at a Hopf point: fold-Hopf, 2:1 resonance, near-multiple eigenvalue
class DegeneracyError : public SolverError {
public:
    using SolverError::SolverError;
};

} // namespace hopfstab
