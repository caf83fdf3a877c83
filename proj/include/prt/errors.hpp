#pragma once

#include <stdexcept>
#include <string>

namespace prt {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DimMismatch : public Error {
public:
  using Error::Error;
};

/// Triplet-style batch without two labels, or a label with a single sample.
class DegenerateBatch : public Error {
public:
  using Error::Error;
};

class InsufficientIdentities : public Error {
public:
  using Error::Error;
};

class TooFewPlayers : public Error {
public:
  using Error::Error;
};

/// All clustering inputs coincide.
class DegenerateInput : public Error {
public:
  using Error::Error;
};

class EmptyGallery : public Error {
public:
  using Error::Error;
};

class LengthMismatch : public Error {
public:
  using Error::Error;
};

class EmptyGroundTruth : public Error {
public:
  using Error::Error;
};

class NonMonotoneFrame : public Error {
public:
  using Error::Error;
};

class ConfigInvalid : public Error {
public:
  using Error::Error;
};

class ParseError : public Error {
public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

/// Configuration document errors. `key()` is the offending key, `path()`
/// the dotted path to it.
class ConfigError : public Error {
public:
  enum class Kind { UnknownKey, TypeError, RangeError };
  ConfigError(Kind kind, std::string path, const std::string& what)
      : Error(path + ": " + what), kind_(kind), path_(std::move(path)) {
    const auto dot = path_.rfind('.');
    key_ = dot == std::string::npos ? path_ : path_.substr(dot + 1);
  }
  Kind kind() const { return kind_; }
  const std::string& key() const { return key_; }
  const std::string& path() const { return path_; }

private:
  Kind kind_;
  std::string path_;
  std::string key_;
};

}  // namespace prt
