#include "flipforge/error.hpp"

namespace flipforge {

InvalidInput::InvalidInput(const std::string& what, std::optional<std::size_t> index)
    : Error(ErrorKind::invalid_input,
            index ? what + " (index " + std::to_string(*index) + ")" : what),
      index_(index) {}

ParseError::ParseError(const std::string& what, std::size_t line, std::size_t byte_offset)
    : InvalidInput(what + " at line " + std::to_string(line) + ", byte " +
                   std::to_string(byte_offset)),
      line_(line),
      byte_offset_(byte_offset) {}

}  // namespace flipforge
