#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>

namespace mfggp {

// Thrown on malformed user input (bad dimensions, invalid config values).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Thrown when a numerical step cannot proceed (factorization failure,
// divergent solve, non-finite objective).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

[[noreturn]] inline void throw_input_error(const std::string& msg) { throw InputError(msg); }

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InputError(msg);
}

// Runs fn(i) for i in [0, n), split over worker threads. threads == 0 picks
// the hardware default; threads == 1 runs inline. Exceptions from workers are
// rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  unsigned threads = 0);

unsigned resolve_thread_count(unsigned requested);

}  // namespace mfggp
