#include "nsh/error.hpp"

namespace nsh {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "invalid argument";
    case Errc::empty_input: return "empty input";
    case Errc::parse: return "parse error";
    case Errc::non_finite: return "non-finite value";
    case Errc::normal_mismatch: return "normal count mismatch";
    case Errc::io: return "I/O error";
    case Errc::bad_magic: return "bad magic";
    case Errc::unsupported_version: return "unsupported version";
    case Errc::truncated: return "truncated file";
    case Errc::sampling_failed: return "sampling failed";
  }
  return "unknown";
}

}  // namespace nsh
