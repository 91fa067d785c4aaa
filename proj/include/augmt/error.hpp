#pragma once

#include <stdexcept>
#include <string>

namespace augmt {

/// Bad arguments, configuration, or missing inputs. CLI exit code 2.
class ValidationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent data (alignment, encoding, file formats). CLI exit code 3.
class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A DataError tied to a specific line of an input (1-based when reported to users).
class LineError : public DataError {
  public:
    LineError(std::size_t line, const std::string &what)
        : DataError(what + " (line " + std::to_string(line) + ")"), line_(line) {}

    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitData = 3;

} // namespace augmt
