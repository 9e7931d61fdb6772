#pragma once

#include <stdexcept>
#include <string>

namespace mgtrade {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Sequence lengths or matrix shapes disagree.
class DimensionError : public Error {
public:
    using Error::Error;
};

// A parameter or input value is outside its admissible range.
class ValidationError : public Error {
public:
    using Error::Error;
};

// The scenario admits no feasible schedule, or a solve reported infeasibility.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

// Total surplus of the traders is not positive, so there is nothing to bargain over.
class NoBargainError : public Error {
public:
    using Error::Error;
};

// Scenario or CSV input could not be parsed; the message starts with the field path.
class ParseError : public Error {
public:
    ParseError(std::string path, const std::string& what)
        : Error(path + ": " + what), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

} // namespace mgtrade
