#pragma once

#include <stdexcept>
#include <string>

namespace cotprompt {

// Base of every error the library raises. `code()` is a stable short token
// used by the CLI for its machine-parsable error line.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& msg) : Error("dimension", msg) {}
};

class ContractError : public Error {
public:
    explicit ContractError(const std::string& msg) : Error("contract", msg) {}
};

class DegenerateInputError : public Error {
public:
    explicit DegenerateInputError(const std::string& msg) : Error("degenerate_input", msg) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error("config", msg) {}
};

class IndexError : public Error {
public:
    explicit IndexError(const std::string& msg) : Error("index", msg) {}
};

class DomainError : public Error {
public:
    explicit DomainError(const std::string& msg) : Error("domain", msg) {}
};

class NonFiniteError : public Error {
public:
    explicit NonFiniteError(const std::string& msg) : Error("non_finite", msg) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error("io", msg) {}
};

}  // namespace cotprompt
