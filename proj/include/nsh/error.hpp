#pragma once

#include <stdexcept>
#include <string>

namespace nsh {

enum class Errc {
  invalid_argument,
  empty_input,
  parse,
  non_finite,
  normal_mismatch,
  io,
  bad_magic,
  unsupported_version,
  truncated,
  sampling_failed,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace nsh
