#pragma once

#include <stdexcept>
#include <string>

namespace deeptrade {

/// Bad or missing input data: unreadable files, malformed rows, invariant
/// violations, ranges that select nothing, histories too short to warm up.
class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace deeptrade
