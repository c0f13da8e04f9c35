#pragma once

#include <stdexcept>
#include <string>

namespace scalesearch {

// Base class for every error raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// core
struct EmptyAnswer : Error {
    EmptyAnswer() : Error("answer is empty after normalization") {}
};

// executor
struct ExecutionError : Error {
    using Error::Error;
};
struct InvalidAlpha : Error {
    using Error::Error;
};

// policy / remote backend
struct BackendError : Error {
    using Error::Error;
};
struct AuthError : Error {
    using Error::Error;
};
struct BudgetExhausted : Error {
    using Error::Error;
};

// scaling
struct NoVotes : Error {
    NoVotes() : Error("no finished chain produced an answer to vote on") {}
};
struct NoFinishedChains : Error {
    NoFinishedChains() : Error("no sampled chain reached a finished state") {}
};

// metrics
struct EmptyInput : Error {
    EmptyInput() : Error("empty input") {}
};

// cli / config / dataset
struct ConfigError : Error {
    using Error::Error;
};
struct ParseError : Error {
    ParseError(int line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line(line) {}
    int line;
};
struct DuplicateId : Error {
    DuplicateId(int line, const std::string& id)
        : Error("line " + std::to_string(line) + ": duplicate problem id \"" + id + "\""),
          line(line),
          id(id) {}
    int line;
    std::string id;
};

}  // namespace scalesearch
