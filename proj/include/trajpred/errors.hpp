#pragma once

#include <stdexcept>
#include <string>

namespace trajpred {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Tensor/operand shape disagreement.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Invalid or inconsistent configuration values.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed input text (annotation files, config files).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Structurally valid input whose content violates a data contract.
class DataError : public Error {
public:
    using Error::Error;
};

/// Non-finite values where finite ones are required.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Caller violated an API precondition.
class ContractError : public Error {
public:
    using Error::Error;
};

/// Attention called with an empty key/value context.
class EmptyContextError : public Error {
public:
    using Error::Error;
};

/// Optimization failure (non-finite gradients or loss).
class TrainingError : public Error {
public:
    using Error::Error;
};

/// Gradient-check closure produced different values on repeated evaluation.
class DeterminismError : public Error {
public:
    using Error::Error;
};

/// Crop window cannot be satisfied by the source image.
class CropError : public Error {
public:
    using Error::Error;
};

/// Filesystem or serialization failure.
class IoError : public Error {
public:
    using Error::Error;
};

/// Checkpoint incompatible with the model it is loaded into.
class LoadError : public Error {
public:
    using Error::Error;
};

} // namespace trajpred
