#ifndef STM_ERRORS_HPP
#define STM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace stm {

// Exit-code mapping used by the CLI: validation -> 2, data -> 3, numeric -> 4.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace stm

#endif
