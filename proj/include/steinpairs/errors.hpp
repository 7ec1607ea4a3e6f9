#pragma once

#include <stdexcept>
#include <string>

namespace steinpairs {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define STEINPAIRS_DEFINE_ERROR(Name)        \
  class Name : public Error {                \
   public:                                   \
    explicit Name(const std::string& what)   \
        : Error(#Name ": " + what) {}        \
  }

STEINPAIRS_DEFINE_ERROR(InvalidArgument);
STEINPAIRS_DEFINE_ERROR(NotPSD);
STEINPAIRS_DEFINE_ERROR(Nonsymmetric);
STEINPAIRS_DEFINE_ERROR(Singular);
STEINPAIRS_DEFINE_ERROR(SingularSigma);
STEINPAIRS_DEFINE_ERROR(DegenerateDesign);
STEINPAIRS_DEFINE_ERROR(NoFineConditional);
STEINPAIRS_DEFINE_ERROR(DegenerateBound);
STEINPAIRS_DEFINE_ERROR(NotTriangular);
STEINPAIRS_DEFINE_ERROR(ZeroDiagonal);
STEINPAIRS_DEFINE_ERROR(IoError);

#undef STEINPAIRS_DEFINE_ERROR

// Configuration problems carry the offending line (0 when it came from the
// command line) and field name so callers can point at them.
class ConfigError : public Error {
 public:
  ConfigError(int line, std::string field, const std::string& message)
      : Error(format(line, field, message)), line_(line), field_(std::move(field)) {}

  int line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  static std::string format(int line, const std::string& field, const std::string& message) {
    std::string out = "ConfigError: ";
    if (line > 0) out += "line " + std::to_string(line) + ": ";
    out += "field '" + field + "': " + message;
    return out;
  }

  int line_;
  std::string field_;
};

}  // namespace steinpairs
