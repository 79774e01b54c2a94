// SPDX-License-Identifier: Apache-2.0
#include "fidl/error.h"

#include <sstream>

namespace fidl {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidLogits: return "invalid-logits";
    case ErrorKind::kUnknownTemplate: return "unknown-template";
    case ErrorKind::kDegenerateClasses: return "degenerate-classes";
    case ErrorKind::kEmptySet: return "empty-set";
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kDomain: return "domain";
    case ErrorKind::kParameter: return "parameter";
    case ErrorKind::kCodec: return "codec";
    case ErrorKind::kInput: return "input";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kIntegrity: return "integrity";
    case ErrorKind::kUnsatisfiableMixture: return "unsatisfiable-mixture";
    case ErrorKind::kDegenerate: return "degenerate";
    case ErrorKind::kConsistency: return "consistency";
    case ErrorKind::kInsufficientDetail: return "insufficient-detail";
    case ErrorKind::kProtocol: return "protocol";
    case ErrorKind::kBackendTimeout: return "backend-timeout";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kAlignment: return "alignment";
    case ErrorKind::kPartialReport: return "partial-report";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(ErrorKindName(kind)) + ": " + message),
      kind_(kind) {}

InvalidLogitsError::InvalidLogitsError(std::size_t index,
                                       std::size_t batch_index,
                                       const std::string& message)
    : Error(ErrorKind::kInvalidLogits, message),
      index_(index),
      batch_index_(batch_index) {}

namespace {
std::string ShapeMessage(std::size_t lh, std::size_t lw, std::size_t rh,
                         std::size_t rw) {
  std::ostringstream os;
  os << "shape mismatch: " << lh << "x" << lw << " vs " << rh << "x" << rw;
  return os.str();
}
}  // namespace

ShapeError::ShapeError(std::size_t lhs_height, std::size_t lhs_width,
                       std::size_t rhs_height, std::size_t rhs_width)
    : Error(ErrorKind::kShape,
            ShapeMessage(lhs_height, lhs_width, rhs_height, rhs_width)),
      lhs_height(lhs_height),
      lhs_width(lhs_width),
      rhs_height(rhs_height),
      rhs_width(rhs_width) {}

ProtocolError::ProtocolError(const std::string& message, std::string raw_line)
    : Error(ErrorKind::kProtocol, message), raw_line_(std::move(raw_line)) {}

ParseError::ParseError(std::size_t line, const std::string& message)
    : Error(ErrorKind::kParse,
            "line " + std::to_string(line) + ": " + message),
      line_(line) {}

}  // namespace fidl
