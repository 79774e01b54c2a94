// SPDX-License-Identifier: Apache-2.0
#ifndef FIDL_ERROR_H_
#define FIDL_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fidl {

enum class ErrorKind {
  kInvalidLogits,
  kUnknownTemplate,
  kDegenerateClasses,
  kEmptySet,
  kShape,
  kDomain,
  kParameter,
  kCodec,
  kInput,
  kParse,
  kIntegrity,
  kUnsatisfiableMixture,
  kDegenerate,
  kConsistency,
  kInsufficientDetail,
  kProtocol,
  kBackendTimeout,
  kConfig,
  kAlignment,
  kPartialReport,
  kIo,
};

std::string_view ErrorKindName(ErrorKind kind);

// Base of every error raised by the library. The kind is stable and is what
// tests and the CLI dispatch on; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Non-finite logit. `index` is the position inside the 8-vector, and
// `batch_index` the position in a batch (or npos for single-vector calls).
class InvalidLogitsError : public Error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  InvalidLogitsError(std::size_t index, std::size_t batch_index,
                     const std::string& message);

  std::size_t index() const { return index_; }
  std::size_t batch_index() const { return batch_index_; }

 private:
  std::size_t index_;
  std::size_t batch_index_;
};

class ShapeError : public Error {
 public:
  ShapeError(std::size_t lhs_height, std::size_t lhs_width,
             std::size_t rhs_height, std::size_t rhs_width);

  std::size_t lhs_height, lhs_width, rhs_height, rhs_width;
};

// Malformed protocol traffic; keeps the offending line verbatim.
class ProtocolError : public Error {
 public:
  ProtocolError(const std::string& message, std::string raw_line);

  const std::string& raw_line() const { return raw_line_; }

 private:
  std::string raw_line_;
};

// Parse failure in a line-oriented file. Line numbers are 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message);

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace fidl

#endif  // FIDL_ERROR_H_
