#pragma once

#include <stdexcept>
#include <string>

namespace evsp {

enum class ErrorKind { io, format, payload_length, dimension_overflow, validation, numerical };

// Every failure raised by the library carries a kind so the CLI can map it
// to a distinct exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error io_error(const std::string& what) { return {ErrorKind::io, what}; }
inline Error format_error(const std::string& what) { return {ErrorKind::format, what}; }
inline Error payload_length_error(const std::string& what) { return {ErrorKind::payload_length, what}; }
inline Error dimension_overflow_error(const std::string& what) { return {ErrorKind::dimension_overflow, what}; }
inline Error validation_error(const std::string& what) { return {ErrorKind::validation, what}; }
inline Error numerical_error(const std::string& what) { return {ErrorKind::numerical, what}; }

}  // namespace evsp
