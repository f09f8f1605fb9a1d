#pragma once

#include <stdexcept>
#include <string>

namespace arraysep {

// File and format problems (missing WAV, bad RIFF chunk, unreadable JSON).
class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failures that should abort a run (non-finite state, failed solve).
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace arraysep
