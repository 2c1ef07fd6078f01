#pragma once

#include <stdexcept>
#include <string>

namespace sramage {

// Base class for all toolkit errors. Each subclass maps to a distinct
// failure category (and a distinct CLI exit code).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller passed an argument outside the documented domain.
class InvalidArgumentError : public Error {
public:
    using Error::Error;
};

// The data itself makes the requested computation undefined
// (constant truth vector, single-class labels, ...).
class DegenerateDataError : public Error {
public:
    using Error::Error;
};

// File missing or unreadable.
class IoError : public Error {
public:
    using Error::Error;
};

// A document (manifest, config, model, dataset) is malformed.
class FormatError : public Error {
public:
    using Error::Error;
};

// A dump file does not have the length declared in the manifest.
class SizeMismatchError : public FormatError {
public:
    using FormatError::FormatError;
};

// The same device id appears twice in one manifest.
class DuplicateDeviceError : public FormatError {
public:
    using FormatError::FormatError;
};

// Model, schema and feature dimensions do not agree.
class SchemaMismatchError : public Error {
public:
    using Error::Error;
};

}
