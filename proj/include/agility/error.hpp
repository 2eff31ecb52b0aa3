#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace agility {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape or dimension disagreement between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A sequence window shorter than the convolution kernel.
class InputTooShortError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf encountered. Carries the recurrent or optimizer step when known.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what,
                        std::optional<std::uint64_t> step = std::nullopt)
      : Error(step ? what + " (step " + std::to_string(*step) + ")" : what),
        step_(step) {}

  std::optional<std::uint64_t> step() const noexcept { return step_; }

 private:
  std::optional<std::uint64_t> step_;
};

/// Malformed input file; `line()` is 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace agility
