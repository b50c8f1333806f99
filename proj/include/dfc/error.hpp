#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dfc {

enum class ErrorKind {
  config,
  data,
  io,
  numeric,
  shape,
  usage,
  backend,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the toolkit; the kind maps onto the CLI's
// machine-readable error line.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace dfc
