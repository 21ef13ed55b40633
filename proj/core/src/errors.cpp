#include "quadopt/errors.hpp"

namespace quadopt {

ParseError::ParseError(const std::string& what, std::size_t offset)
    : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}

}  // namespace quadopt
