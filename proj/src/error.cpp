#include "dfc/error.hpp"

namespace dfc {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::data: return "data";
    case ErrorKind::io: return "io";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::shape: return "shape";
    case ErrorKind::usage: return "usage";
    case ErrorKind::backend: return "backend";
  }
  return "unknown";
}

}  // namespace dfc
