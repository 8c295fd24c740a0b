#pragma once

#include <stdexcept>
#include <string>

namespace navkit {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define NAVKIT_ERROR(Name)                     \
  struct Name : Error {                        \
    explicit Name(const std::string& m = #Name) \
        : Error(m) {}                          \
  }

NAVKIT_ERROR(NotARotation);
NAVKIT_ERROR(AngleAtPi);
NAVKIT_ERROR(SingularRadius);
NAVKIT_ERROR(FrameMismatch);
NAVKIT_ERROR(SpecInvalid);
NAVKIT_ERROR(SingularInnovation);
NAVKIT_ERROR(CovarianceNotPSD);
NAVKIT_ERROR(ConfigError);

#undef NAVKIT_ERROR

}  // namespace navkit
