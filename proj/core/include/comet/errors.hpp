#pragma once

#include <stdexcept>
#include <string>

namespace comet {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define COMET_ERROR(Name)                      \
    class Name : public Error {                \
    public:                                    \
        using Error::Error;                    \
    }

COMET_ERROR(UnknownAction);
COMET_ERROR(IndexOutOfRange);
COMET_ERROR(StaleToken);
COMET_ERROR(UnknownEnv);
COMET_ERROR(UnknownPaletteIndex);
COMET_ERROR(UnboundVariable);
COMET_ERROR(DegenerateSeries);
COMET_ERROR(ParseError);
COMET_ERROR(MissingRule);
COMET_ERROR(EnvUnavailable);
COMET_ERROR(UsageError);
COMET_ERROR(UnmodeledCell);
COMET_ERROR(MissingCredential);
COMET_ERROR(NetworkError);

#undef COMET_ERROR

class FormatError : public Error {
public:
    FormatError(const std::string& msg, int line)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

class AnnotationParseError : public Error {
public:
    AnnotationParseError(const std::string& msg, std::string raw)
        : Error(msg), raw_(std::move(raw)) {}
    const std::string& raw() const { return raw_; }

private:
    std::string raw_;
};

}  // namespace comet
