#ifndef CONTENTORACLE_ERROR_HPP
#define CONTENTORACLE_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace contentoracle
{

/// Base of every exception thrown by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class MalformedMime : public Error
{
public:
    using Error::Error;
};

/// Filesystem or attribute-store failure. Carries the offending path.
class IoError : public Error
{
public:
    IoError(const std::string& what, std::string path)
        : Error(path.empty() ? what : what + ": " + path)
        , path_(std::move(path))
    {
    }

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// A parse error tied to a line of a line-oriented input.
class LineError : public Error
{
public:
    LineError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what)
        , line_(line)
    {
    }

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class MalformedSignature : public LineError
{
public:
    using LineError::LineError;
};

class DuplicateName : public LineError
{
public:
    using LineError::LineError;
};

class MalformedTree : public LineError
{
public:
    using LineError::LineError;
};

class NetworkError : public Error
{
public:
    using Error::Error;
};

class HttpError : public Error
{
public:
    explicit HttpError(int status)
        : Error("HTTP status " + std::to_string(status))
        , status_(status)
    {
    }

    int status() const noexcept { return status_; }

private:
    int status_;
};

class ConfigError : public Error
{
public:
    using Error::Error;
};

} // namespace contentoracle

#endif // CONTENTORACLE_ERROR_HPP
