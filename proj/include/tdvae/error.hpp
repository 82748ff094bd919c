#pragma once

#include <stdexcept>
#include <string>

namespace tdvae {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input outside the mathematical domain of an operation (non-finite angle, sigma <= 0, D = 0).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A vector that has to be normalized has zero length.
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

/// An embedding that is not the image of any point on the torus.
class ReconstructionError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration (bad hyperparameters, too few samples for the folds, missing seed).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Corrupt or truncated file.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Non-finite loss or parameters during optimization.
class NumericError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace tdvae
