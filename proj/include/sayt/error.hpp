#pragma once

#include <stdexcept>
#include <string>

namespace sayt {

/// Bad user input: a malformed file, a missing entry, an invalid argument.
class InputError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// A persisted artifact (index, checkpoint) that cannot be decoded.
class FormatError : public InputError {
   public:
    using InputError::InputError;
};

inline std::string at_line(std::string const &path, std::size_t line)
{
    return path + ":" + std::to_string(line) + ": ";
}

}  // namespace sayt
