#include "heavyica/error.hpp"

namespace heavyica {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::dimension_mismatch: return "dimension_mismatch";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::convergence: return "convergence";
    case ErrorKind::sampling: return "sampling";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

}  // namespace heavyica
