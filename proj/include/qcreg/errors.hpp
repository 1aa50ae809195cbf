#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace qcreg {

// Every error raised by the library derives from Error so callers can catch
// one type; the subclasses let tests and the CLI tell failure modes apart.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class OutOfDomain : public Error {
 public:
  using Error::Error;
};

class DuplicateLandmark : public Error {
 public:
  DuplicateLandmark(const std::string& msg, std::size_t first, std::size_t second)
      : Error(msg), first_(first), second_(second) {}
  std::size_t first() const { return first_; }
  std::size_t second() const { return second_; }

 private:
  std::size_t first_;
  std::size_t second_;
};

class DegenerateElement : public Error {
 public:
  using Error::Error;
};

class NotOrientationPreserving : public Error {
 public:
  using Error::Error;
};

class InvalidR : public Error {
 public:
  InvalidR(const std::string& msg, std::size_t tet) : Error(msg), tet_(tet) {}
  std::size_t tet() const { return tet_; }

 private:
  std::size_t tet_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& msg, double residual, int iterations)
      : Error(msg), residual_(residual), iterations_(iterations) {}
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

class IllPosed : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t line) : Error(msg), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace qcreg
