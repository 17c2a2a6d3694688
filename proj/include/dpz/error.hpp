#pragma once

#include <stdexcept>
#include <string>

namespace dpz {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller passed something the operation's precondition rejects.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Encoded data failed validation while decoding.
class CorruptStream : public Error {
public:
    explicit CorruptStream(const std::string& what)
        : Error("corrupt stream: " + what) {}
};

/// Container header has the wrong magic or an unknown version.
class UnsupportedContainer : public Error {
public:
    UnsupportedContainer() : Error("unsupported container") {}
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace dpz
