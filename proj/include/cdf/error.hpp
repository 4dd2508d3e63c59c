#pragma once

#include <stdexcept>
#include <string>

namespace cdf {

enum class ErrorKind {
    InvalidConfig,
    InvalidData,
    InsufficientData,
    EmptyResult,
    MissingFeature,
    Shape,
    DegenerateData,
    Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace cdf
