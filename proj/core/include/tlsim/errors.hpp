#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tlsim {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the domain of a closed-form relation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration. `field()` names the offending key (e.g. `g2.period_um`).
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Grid too coarse or window too small for the requested propagation.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

/// Intensity model cannot be sampled (e.g. identically zero).
class ModelError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  IoError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace tlsim
