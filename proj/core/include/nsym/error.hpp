#pragma once

#include <stdexcept>
#include <string>

namespace nsym {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Structurally invalid expression, e.g. division by a syntactic zero.
class MalformedError : public Error {
public:
    using Error::Error;
};

/// collect() found non-polynomial dependence on an indeterminate.
class SeparationError : public Error {
public:
    SeparationError(const std::string& what, std::string subtree)
        : Error(what + ": " + subtree), subtree_(std::move(subtree)) {}
    const std::string& subtree() const { return subtree_; }

private:
    std::string subtree_;
};

class UsageError : public Error {
public:
    using Error::Error;
};

class SingularMetricError : public Error {
public:
    using Error::Error;
};

class InfeasibleDataError : public Error {
public:
    using Error::Error;
};

/// Numeric probing could not find evaluable sample points.
class ProbeFailureError : public Error {
public:
    using Error::Error;
};

class EvalError : public Error {
public:
    using Error::Error;
};

/// Sum/power expansion would exceed the hard term budget.
class ExpansionLimitError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(int line, int col, const std::string& message)
        : Error("parse error at " + std::to_string(line) + ":" + std::to_string(col) + ": " + message),
          line_(line),
          col_(col),
          message_(message) {}

    int line() const { return line_; }
    int col() const { return col_; }
    const std::string& message() const { return message_; }

private:
    int line_;
    int col_;
    std::string message_;
};

} // namespace nsym
