#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace errtax {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input; carries the 1-based line number when one applies (0 when
// the source has no line structure).
class ParseError : public Error {
public:
    explicit ParseError(const std::string& message) : Error(message), line_(0) {}
    ParseError(const std::string& message, std::size_t line)
        : Error(message + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class DuplicateIdError : public Error {
public:
    explicit DuplicateIdError(const std::string& id)
        : Error("duplicate record id \"" + id + "\""), id_(id) {}
    const std::string& id() const { return id_; }

private:
    std::string id_;
};

class TransportError : public Error {
public:
    using Error::Error;
};

class AuthorizationError : public Error {
public:
    using Error::Error;
};

class ResponseShapeError : public Error {
public:
    using Error::Error;
};

}  // namespace errtax
