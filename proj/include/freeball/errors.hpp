#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace freeball {

// Base of every exception thrown by the library. kind() is the stable,
// machine-readable name that the CLI puts into its error JSON.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class DimensionMismatch : public Error {
public:
    explicit DimensionMismatch(const std::string& what) : Error("DimensionMismatch", what) {}
};

class NonFinite : public Error {
public:
    explicit NonFinite(const std::string& what) : Error("NonFinite", what) {}
};

class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& what) : Error("InvalidArgument", what) {}
};

class Singular : public Error {
public:
    Singular(const std::string& what, double smallest_sv)
        : Error("Singular", what), smallest_sv_(smallest_sv) {}

    double smallest_singular_value() const noexcept { return smallest_sv_; }

private:
    double smallest_sv_;
};

// An inversion node of a rational expression could not be evaluated.
// path() lists child indices from the root to the failing node.
class OutOfDomain : public Error {
public:
    OutOfDomain(const std::string& what, std::vector<std::size_t> path, double smallest_sv)
        : Error("OutOfDomain", what), path_(std::move(path)), smallest_sv_(smallest_sv) {}

    const std::vector<std::size_t>& path() const noexcept { return path_; }
    double smallest_singular_value() const noexcept { return smallest_sv_; }

private:
    std::vector<std::size_t> path_;
    double smallest_sv_;
};

class SyntaxError : public Error {
public:
    SyntaxError(const std::string& what, std::size_t line, std::size_t column,
                std::vector<std::string> expected)
        : Error("SyntaxError", what + " at " + std::to_string(line) + ":" + std::to_string(column)),
          line_(line), column_(column), expected_(std::move(expected)) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }
    const std::vector<std::string>& expected() const noexcept { return expected_; }

private:
    std::size_t line_;
    std::size_t column_;
    std::vector<std::string> expected_;
};

class UnknownVariable : public Error {
public:
    explicit UnknownVariable(const std::string& what) : Error("UnknownVariable", what) {}
};

class NotPolynomial : public Error {
public:
    explicit NotPolynomial(const std::string& what) : Error("NotPolynomial", what) {}
};

class NotMonicAtZero : public Error {
public:
    explicit NotMonicAtZero(const std::string& what) : Error("NotMonicAtZero", what) {}
};

class NotContractive : public Error {
public:
    NotContractive(const std::string& what, double q) : Error("NotContractive", what), q_(q) {}
    double contraction() const noexcept { return q_; }

private:
    double q_;
};

class Degenerate : public Error {
public:
    explicit Degenerate(const std::string& what) : Error("Degenerate", what) {}
};

class DegenerateExpression : public Error {
public:
    explicit DegenerateExpression(const std::string& what) : Error("DegenerateExpression", what) {}
};

class AllSamplesOutOfDomain : public Error {
public:
    explicit AllSamplesOutOfDomain(const std::string& what) : Error("AllSamplesOutOfDomain", what) {}
};

class OutOfPencilDomain : public Error {
public:
    OutOfPencilDomain(const std::string& what, double smallest_sv)
        : Error("OutOfPencilDomain", what), smallest_sv_(smallest_sv) {}
    double smallest_singular_value() const noexcept { return smallest_sv_; }

private:
    double smallest_sv_;
};

class IdentityViolation : public Error {
public:
    IdentityViolation(const std::string& what, double residual)
        : Error("IdentityViolation", what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class NotFound : public Error {
public:
    explicit NotFound(const std::string& what) : Error("NotFound", what) {}
};

class StabilityViolation : public Error {
public:
    StabilityViolation(const std::string& what, double smallest_sv)
        : Error("StabilityViolation", what), smallest_sv_(smallest_sv) {}
    double smallest_singular_value() const noexcept { return smallest_sv_; }

private:
    double smallest_sv_;
};

class NotAccretive : public Error {
public:
    NotAccretive(const std::string& what, double min_eig)
        : Error("NotAccretive", what), min_eig_(min_eig) {}
    double min_eigenvalue() const noexcept { return min_eig_; }

private:
    double min_eig_;
};

}  // namespace freeball
