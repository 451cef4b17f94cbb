#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sentqa {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Caller supplied something outside an operation's contract (bad span,
/// empty question, out-of-range ordinal, ...).
class InvalidInputError : public Error {
  public:
    using Error::Error;
};

class NotFoundError : public Error {
  public:
    using Error::Error;
};

/// Text that yields no features: an all-stopword frame or an empty query.
class UnencodableError : public Error {
  public:
    using Error::Error;
};

/// Malformed record in a JSONL/JSON input. `line()` is 1-based, 0 when the
/// input is not line oriented.
class ParseError : public Error {
  public:
    ParseError(std::size_t line, const std::string& what)
        : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

class DuplicateIdError : public Error {
  public:
    DuplicateIdError(std::string id, std::size_t line)
        : Error("line " + std::to_string(line) + ": duplicate id '" + id + "'"), id_(std::move(id)) {}

    const std::string& id() const noexcept { return id_; }

  private:
    std::string id_;
};

}  // namespace sentqa
