#pragma once

#include <stdexcept>
#include <string>

namespace stegolab {

// Domain failure; the CLI maps these to exit code 1 with the message intact.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace stegolab
