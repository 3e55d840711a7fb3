#pragma once

#include <stdexcept>
#include <string>

namespace dact {

/// Base class of every error thrown by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes disagree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Invalid hyperparameter, empty input set, inconsistent options.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed file content. Messages carry the line number or row key.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Label outside the declared LabelSet or class index out of range.
class LabelError : public Error {
public:
    using Error::Error;
};

/// Dialogue structure violated (non-consecutive turn indices).
class StructureError : public Error {
public:
    using Error::Error;
};

class MissingEmbeddingError : public Error {
public:
    using Error::Error;
};

class VocabularyError : public Error {
public:
    using Error::Error;
};

/// Operation called in the wrong state (e.g. backward with nothing recorded).
class StateError : public Error {
public:
    using Error::Error;
};

/// Stratified sample cannot satisfy a label quota.
class InfeasibleSampleError : public Error {
public:
    using Error::Error;
};

class CheckpointError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace dact
