#pragma once

#include <stdexcept>
#include <string>

namespace earstudy {

// Configuration problems map to exit code 1, data problems to exit code 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

// A required input file is missing or unreadable. Pipelines fail fast on it
// instead of excluding a single conference.
class InputError : public DataError {
public:
    using DataError::DataError;
};

// Malformed records: wrong point counts, bad lengths, unordered timestamps.
class StructuralError : public DataError {
public:
    using DataError::DataError;
};

class DegenerateEyeError : public DataError {
public:
    using DataError::DataError;
};

// Mathematical domain violations such as log of zero.
class DomainError : public DataError {
public:
    using DataError::DataError;
};

// Price data does not cover a requested instant or window.
class CoverageError : public DataError {
public:
    using DataError::DataError;
};

class InsufficientDataError : public DataError {
public:
    using DataError::DataError;
};

class DegenerateRegressorError : public DataError {
public:
    using DataError::DataError;
};

} // namespace earstudy
