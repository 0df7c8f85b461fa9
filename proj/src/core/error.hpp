#pragma once

#include <stdexcept>
#include <string>

namespace intona {

enum class Status {
  Ok = 0,
  InvalidArgument,
  Io,
  Format,
  BadMagic,
  VersionMismatch,
  Truncated,
  ShapeMismatch,
  BadState,
  Internal,
};

const char* status_name(Status s);

// The one exception type the core throws. The C API layer maps it onto
// status codes and a thread-local message.
class Error : public std::runtime_error {
public:
  Error(Status status, const std::string& msg)
      : std::runtime_error(msg), status_(status) {}
  Status status() const { return status_; }

private:
  Status status_;
};

[[noreturn]] inline void fail(Status s, const std::string& msg) {
  throw Error(s, msg);
}

inline void require(bool cond, Status s, const std::string& msg) {
  if (!cond) fail(s, msg);
}

}  // namespace intona
