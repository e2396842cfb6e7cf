#pragma once

#include <stdexcept>
#include <string>

namespace knotpair {

/// Input data violates a documented invariant or precondition.
class validation_error : public std::runtime_error {
 public:
  explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

/// A byte stream or text file does not match its declared format.
class format_error : public std::runtime_error {
 public:
  explicit format_error(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem-level failure (open, read, write).
class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace knotpair
