#pragma once

#include <stdexcept>
#include <string>

namespace lllcsp {

enum class ErrorKind {
    syntax,
    regime,
    resource,
    unsat,
    internal,
};

inline const char* to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::syntax: return "syntax";
    case ErrorKind::regime: return "regime";
    case ErrorKind::resource: return "resource";
    case ErrorKind::unsat: return "unsat";
    case ErrorKind::internal: return "internal";
    }
    return "internal";
}

/// Process exit status used by the command-line tool for each error kind.
inline int exit_code(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::syntax: return 2;
    case ErrorKind::regime: return 3;
    case ErrorKind::resource: return 4;
    case ErrorKind::unsat: return 5;
    case ErrorKind::internal: return 9;
    }
    return 9;
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Parse failure carrying a 1-based line (and column when known, else 0).
class SyntaxError : public Error {
public:
    SyntaxError(int line, int column, const std::string& message)
        : Error(ErrorKind::syntax, format(line, column, message)), line_(line), column_(column)
    {
    }

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    static std::string format(int line, int column, const std::string& message)
    {
        std::string out = "line " + std::to_string(line);
        if (column > 0)
            out += ", column " + std::to_string(column);
        return out + ": " + message;
    }

    int line_;
    int column_;
};

} // namespace lllcsp
