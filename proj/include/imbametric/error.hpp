#pragma once

#include <stdexcept>
#include <string>

namespace imbametric {

/// Broad failure category. The CLI maps these onto exit codes 1, 2 and 3.
enum class ErrorKind { Usage, Data, Numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline Error usage_error(const std::string& what) { return {ErrorKind::Usage, what}; }
inline Error data_error(const std::string& what) { return {ErrorKind::Data, what}; }
inline Error numeric_error(const std::string& what) { return {ErrorKind::Numeric, what}; }

}  // namespace imbametric
