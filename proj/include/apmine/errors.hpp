#pragma once

#include <stdexcept>
#include <string>

namespace apmine {

// Base class for all toolkit errors. Subclasses tag the failing layer so
// callers (and the CLI) can report precisely what went wrong.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : Error {
    using Error::Error;
};

// Header/column problems: missing attribute, duplicate names, bad kinds.
struct SchemaError : Error {
    using Error::Error;
};

// Cell- or token-level parse failures; message carries row/position context.
struct ParseError : Error {
    using Error::Error;
};

// Timestamps out of order or cadence violations.
struct OrderingError : Error {
    using Error::Error;
};

// Raw actuator value that does not decode under the configured encoding.
struct EncodingError : Error {
    using Error::Error;
};

struct NumericError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

// Guard rails on oracle-style exhaustive routines.
struct CapacityError : Error {
    using Error::Error;
};

// Internal contract violation, e.g. an itemset collection that is not
// closed under subsets.
struct ConsistencyError : Error {
    using Error::Error;
};

// Attack prefix could not be established under the plant interlocks.
struct LaunchError : Error {
    using Error::Error;
};

// Overlapping attack windows in a scenario run.
struct ScheduleError : Error {
    using Error::Error;
};

} // namespace apmine
