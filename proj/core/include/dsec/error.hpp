#pragma once

#include <stdexcept>
#include <string>

namespace dsec {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operand shapes disagree.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Input outside the documented domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

// Training diverged or otherwise could not proceed.
class TrainingError : public Error {
public:
    using Error::Error;
};

// Malformed file content.
class FormatError : public Error {
public:
    using Error::Error;
};

} // namespace dsec
