#pragma once

#include <stdexcept>
#include <string>

namespace deeptime {

// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Incompatible matrix/tensor shapes.
class ShapeMismatch : public Error {
public:
    using Error::Error;
};

// Cholesky pivot <= 0: the system is not positive definite (regularizer too
// small or degenerate features).
class NotPositiveDefinite : public Error {
public:
    using Error::Error;
};

// Ridge system with lambda = 0 and a singular Gram matrix.
class Degenerate : public Error {
public:
    using Error::Error;
};

// NaN or Inf produced where finite values are required.
class NonFiniteValue : public Error {
public:
    using Error::Error;
};

// NaN or Inf in a gradient set.
class NonFiniteGradient : public Error {
public:
    using Error::Error;
};

// Malformed input file; message carries row/column context.
class ParseError : public Error {
public:
    using Error::Error;
};

class EmptyFile : public Error {
public:
    using Error::Error;
};

// A chronological split is too short for the requested lookback/horizon.
class SplitTooSmall : public Error {
public:
    using Error::Error;
};

class InvalidConfig : public Error {
public:
    using Error::Error;
};

} // namespace deeptime
