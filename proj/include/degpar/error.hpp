#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace degpar {

enum class ErrorKind {
    invalid_argument,
    singular_evaluation,
    not_psd,
    out_of_range,
    floor_too_large,
    query_outside_grid,
    admissibility,
    config,
    io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; `kind()` distinguishes the failure.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace degpar
