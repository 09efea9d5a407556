#pragma once

#include <stdexcept>
#include <string>

namespace pcam {

/// Violated precondition or malformed configuration. CLI exit code 2.
class ContractError : public std::runtime_error {
public:
  explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite value produced by a numeric kernel. CLI exit code 3.
class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem or parse failure. CLI exit code 4.
class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace pcam
