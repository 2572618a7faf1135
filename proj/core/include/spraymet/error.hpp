#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spraymet {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed expression text. `offset` is the 0-based byte offset of the
/// offending token in the source.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Division by zero, negative radicand or non-finite intermediate.
class EvaluationError : public Error {
public:
    EvaluationError(const std::string& what, std::string subexpression)
        : Error(what + " in '" + subexpression + "'"), subexpression_(std::move(subexpression)) {}

    const std::string& subexpression() const noexcept { return subexpression_; }

private:
    std::string subexpression_;
};

class DomainError : public Error {
public:
    using Error::Error;
};

/// Rejection sampling could not find enough admissible points.
class DomainTooSingular : public DomainError {
public:
    using DomainError::DomainError;
};

/// A spray coefficient failed the sampled Euler check for degree 2.
class HomogeneityViolation : public Error {
public:
    using Error::Error;
};

/// An identity that holds by construction was violated numerically. Signals
/// a derivation bug or an ill-posed domain, never a property of the input.
class InternalIdentityFailure : public Error {
public:
    using Error::Error;
};

class IsotropyInconsistency : public InternalIdentityFailure {
public:
    using InternalIdentityFailure::InternalIdentityFailure;
};

class SingularFrame : public Error {
public:
    using Error::Error;
};

class RankDisagreement : public InternalIdentityFailure {
public:
    using InternalIdentityFailure::InternalIdentityFailure;
};

class NotApplicable : public Error {
public:
    using Error::Error;
};

class PathBlocked : public Error {
public:
    using Error::Error;
};

class QuadratureFailure : public Error {
public:
    using Error::Error;
};

}  // namespace spraymet
