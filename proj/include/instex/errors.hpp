#pragma once

#include <stdexcept>
#include <string>

namespace instex {

// The three families map onto the CLI exit codes (2, 3, 4).

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BackendError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class GeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace instex
