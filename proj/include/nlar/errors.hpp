#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace nlar {

/// Coarse failure class, surfaced by the CLI as a machine-readable tag.
enum class ErrorKind { Domain, Parse, Fit, Explosion, Io };

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Precondition or parameter-domain violation.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(ErrorKind::Domain, what) {}
};

class ParseError : public Error {
public:
    explicit ParseError(const std::string& what) : Error(ErrorKind::Parse, what) {}
};

class FitError : public Error {
public:
    explicit FitError(const std::string& what) : Error(ErrorKind::Fit, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

/// A simulated value left the finite range. `step` is the recursion index
/// at which it happened.
class ExplosionError : public Error {
public:
    ExplosionError(std::size_t step, double value);
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

}  // namespace nlar
