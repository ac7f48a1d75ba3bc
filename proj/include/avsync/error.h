#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace avsync {

/// Base class for all library errors. Precondition violations are reported
/// with std::invalid_argument instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable, malformed or inconsistent user input (files, captions, frames).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A generator backend or external helper process failed.
class BackendError : public Error {
 public:
  explicit BackendError(const std::string& what, std::optional<std::size_t> frame = std::nullopt)
      : Error(frame ? "frame " + std::to_string(*frame) + ": " + what : what), frame_(frame) {}

  std::optional<std::size_t> frame_index() const { return frame_; }

 private:
  std::optional<std::size_t> frame_;
};

/// The external video encoder is missing or failed.
class EncoderError : public Error {
 public:
  using Error::Error;
};

}  // namespace avsync
