#pragma once

#include <stdexcept>
#include <string>

namespace histobench {

/// Precondition violated by a caller-supplied argument.
class ArgumentError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// File exists but is not a decodable PNG/JPEG.
class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Malformed manifest, config or report; the message names the offending entry.
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace histobench
