#pragma once

#include <stdexcept>
#include <string>

namespace heavytail {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParameterError : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct DivergenceError : Error { using Error::Error; };
struct OverflowError : Error { using Error::Error; };
struct BudgetError : Error { using Error::Error; };
struct NoRootError : Error { using Error::Error; };
struct BracketError : Error { using Error::Error; };
struct PreconditionError : Error { using Error::Error; };
struct QuadratureError : Error { using Error::Error; };
struct OrderError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct NonInvertibleError : Error { using Error::Error; };
struct SlitError : DomainError { using DomainError::DomainError; };

} // namespace heavytail
