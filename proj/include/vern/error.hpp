#ifndef VERN_ERROR_HPP_
#define VERN_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace vern {

/// Raised for malformed scenario files, out-of-range parameters and
/// weight constraint violations.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace vern

#endif  // VERN_ERROR_HPP_
