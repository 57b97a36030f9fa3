#include "animgan/error.hpp"

namespace animgan {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Data: return "data";
    case ErrorKind::Numeric: return "numeric";
  }
  return "unknown";
}

}  // namespace animgan
