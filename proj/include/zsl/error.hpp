#pragma once

#include <stdexcept>
#include <string>

namespace zsl {

// Base for everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad configuration, bad flags, contract violations on user input. CLI exit 2.
struct ConfigError : Error {
    using Error::Error;
};

// Missing/corrupt/unwritable files. CLI exit 3.
struct IoError : Error {
    using Error::Error;
};

// Singular systems, divergent training, non-finite values. CLI exit 4.
struct NumericalError : Error {
    using Error::Error;
};

// Non-conformable matrix dimensions. CLI exit 2.
struct ShapeError : Error {
    using Error::Error;
};

}  // namespace zsl
