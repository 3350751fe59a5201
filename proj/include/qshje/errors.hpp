#pragma once

#include <stdexcept>
#include <string>

namespace qshje {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument or violated precondition (bad constants, empty grids, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class EmptyDomain : public Error {
public:
    using Error::Error;
};

class OutOfDomain : public Error {
public:
    using Error::Error;
};

/// Integration of the Schrödinger equation overflowed (deep forbidden region).
class NonFiniteSolution : public Error {
public:
    using Error::Error;
};

/// 1 - gamma_num*gamma_den == 0 or a vanishing Wronskian: the action would be constant.
class DegenerateAction : public Error {
public:
    using Error::Error;
};

class StencilOutOfDomain : public Error {
public:
    using Error::Error;
};

class DuplicateAxis : public Error {
public:
    using Error::Error;
};

class DegeneratePoint : public Error {
public:
    using Error::Error;
};

class DenominatorZero : public Error {
public:
    using Error::Error;
};

class DegenerateGammas : public Error {
public:
    using Error::Error;
};

class DegenerateTensor : public Error {
public:
    using Error::Error;
};

class IllConditionedFit : public Error {
public:
    using Error::Error;
};

/// Generic numerical failure that has no dedicated type.
class NumericalError : public Error {
public:
    using Error::Error;
};

class StepUnderflow : public Error {
public:
    StepUnderflow(const std::string& what, double t) : Error(what), time_(t) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

class LeftDomain : public Error {
public:
    LeftDomain(const std::string& what, double t) : Error(what), time_(t) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

/// Scenario/configuration problem. `where` names the offending field or line.
class ConfigError : public Error {
public:
    ConfigError(const std::string& where, const std::string& what)
        : Error(where.empty() ? what : where + ": " + what), where_(where) {}
    const std::string& where() const noexcept { return where_; }

private:
    std::string where_;
};

}  // namespace qshje
