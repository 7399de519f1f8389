#pragma once

#include <stdexcept>
#include <string>

namespace sptycho {

// Bad arguments or inconsistent inputs detected before any compute starts.
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// A computation produced non-finite values or cannot make progress.
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// File-format or filesystem failure; the message names the offending path.
class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace sptycho
