#pragma once

#include <stdexcept>
#include <string>

namespace calibnet {

enum class ErrorCategory {
    config,
    data,
    shape,
    validation,
    numeric,
    io,
    internal,
};

const char* error_category_name(ErrorCategory c);

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& message)
        : std::runtime_error(message), category_(category) {}

    ErrorCategory category() const { return category_; }
    const char* category_name() const { return error_category_name(category_); }

private:
    ErrorCategory category_;
};

}  // namespace calibnet
