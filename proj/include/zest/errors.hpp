#pragma once

#include <stdexcept>
#include <string>

namespace zest {

// Bad input values or malformed configuration.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// No bracketed numeric list could be found in an oracle reply.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// A reply list was found but its length does not match the region count.
class LengthError : public std::runtime_error {
public:
    explicit LengthError(const std::string& what) : std::runtime_error(what) {}
};

// The planner cannot start (invalid start state or bounds).
class PlanningError : public std::runtime_error {
public:
    explicit PlanningError(const std::string& what) : std::runtime_error(what) {}
};

// The remote oracle could not be reached within the retry budget.
class OracleUnavailable : public std::runtime_error {
public:
    explicit OracleUnavailable(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace zest
