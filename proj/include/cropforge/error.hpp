#pragma once

#include <stdexcept>
#include <string>

namespace cropforge {

// Base class for every error the toolkit raises on bad input.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A configuration or argument failed validation. `field()` names the
// offending parameter so CLI messages can point at it.
class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace cropforge
