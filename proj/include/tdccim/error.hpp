#pragma once

#include <stdexcept>
#include <string>

namespace tdccim {

/// Bad input: malformed files, impossible configurations, out-of-range arguments.
class UserError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model invariant was violated at run time. Never swallowed by the CLI.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline void check_invariant(bool ok, const std::string& what) {
  if (!ok) throw InvariantError(what);
}

}  // namespace tdccim
