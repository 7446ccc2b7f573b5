#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mvp {

using Vec2 = Eigen::Vector2d;

// Bad input: configuration values, file contents, or arguments that violate
// a documented contract. The CLI maps this to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Failure while reading or writing files. The CLI maps this to exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Throws ValidationError with `message` unless `condition` holds.
inline void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

}  // namespace mvp
