#pragma once

#include <stdexcept>
#include <string>

namespace dncm {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed arguments: dimension mismatch, invalid spec, empty input.
class InvalidInput : public Error {
public:
    using Error::Error;
};

class NoClassesError : public Error {
public:
    NoClassesError() : Error("class mean registry is empty") {}
};

class UnknownClassError : public Error {
public:
    explicit UnknownClassError(long long label)
        : Error("label " + std::to_string(label) + " is not in the registry"), label_(label) {}
    long long label() const noexcept { return label_; }

private:
    long long label_;
};

class NoDataError : public Error {
public:
    using Error::Error;
};

class TrainingDiverged : public Error {
public:
    using Error::Error;
};

class ZeroVarianceError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace dncm
