#pragma once

#include <stdexcept>
#include <string>

namespace ctrlforge {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad user-supplied configuration (files, bounds, CLI arguments).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Structure failed validation where a valid structure is required.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Malformed document; carries a byte offset when known.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& what, std::size_t position = 0)
        : Error(what), position_(position) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

// Plant state went non-finite or beyond the divergence threshold.
class SimulationDiverged : public Error {
public:
    using Error::Error;
};

// Non-finite intermediate value inside controller evaluation.
class InterpreterOverflow : public Error {
public:
    using Error::Error;
};

// Prompt template with an unresolved or unknown placeholder.
class TemplateError : public Error {
public:
    using Error::Error;
};

// Chat-completion transport failure.
class LlmError : public Error {
public:
    enum class Kind { Timeout, Auth, Http, Exhausted };

    LlmError(Kind kind, const std::string& what, int status = 0)
        : Error(what), kind_(kind), status_(status) {}

    Kind kind() const { return kind_; }
    int status() const { return status_; }

private:
    Kind kind_;
    int status_;
};

// Proposer could not produce an action (llm mode without fallback only).
class ProposerError : public Error {
public:
    using Error::Error;
};

}  // namespace ctrlforge
