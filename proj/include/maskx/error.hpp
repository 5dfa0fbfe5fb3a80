#pragma once

#include <stdexcept>
#include <string>

namespace maskx {

enum class Errc {
  invalid_argument = 1,
  io = 2,
  format = 3,
  shape_mismatch = 4,
  numeric = 5,
  degenerate = 6,
  unsupported = 7,
  internal = 8,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string msg) : std::runtime_error(std::move(msg)), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool cond, Errc code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

}  // namespace maskx
