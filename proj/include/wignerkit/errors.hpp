#pragma once

#include <stdexcept>
#include <string>

namespace wignerkit {

/// Precondition or tolerance violation (bad input, out-of-range parameter).
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Evaluation broke down numerically (non-finite intermediate, failed reconstruction).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Master-equation DSL error with source position (1-based).
class ParseError : public ValidationError {
public:
    ParseError(const std::string& msg, int line, int column)
        : ValidationError(msg + " at line " + std::to_string(line) + ", column " +
                          std::to_string(column)),
          line_(line), column_(column) {}

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ValidationError(msg);
}

}  // namespace wignerkit
