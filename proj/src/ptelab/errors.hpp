#pragma once

#include <stdexcept>
#include <string>

namespace ptelab {

// Bad inputs: precondition or invariant violated by the caller.
class domain_error : public std::runtime_error {
 public:
  explicit domain_error(const std::string& what) : std::runtime_error(what) {}
};

// Iteration failed to converge, singular or ill-conditioned intermediate.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem trouble while writing results.
class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ptelab
