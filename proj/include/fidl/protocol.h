// SPDX-License-Identifier: Apache-2.0
#ifndef FIDL_PROTOCOL_H_
#define FIDL_PROTOCOL_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fidl/vocab_scorer.h"

namespace fidl {

// Newline-delimited JSON. Every message is one line of compact JSON with
// keys in sorted order; docs/protocol.md lists the exact schemas.
inline constexpr int kProtocolVersion = 1;

struct Hello {
  int version = kProtocolVersion;
  // Empty for the harness side of the handshake.
  std::string backend;
  std::vector<std::string> capabilities;
  bool from_backend = false;

  bool operator==(const Hello&) const = default;
};

struct DecodeParams {
  std::uint64_t seed = 42;
  double temperature = 1.0;

  bool operator==(const DecodeParams&) const = default;
};

struct DetectRequest {
  std::string request_id;
  std::string image_ref;
  std::string question;
  DecodeParams decode;

  bool operator==(const DetectRequest&) const = default;
};

struct DetectResponse {
  std::string request_id;
  LogitVector::Values logits{};

  bool operator==(const DetectResponse&) const = default;
};

struct SegmentRequest {
  std::string request_id;
  std::string image_ref;
  std::string question;

  bool operator==(const SegmentRequest&) const = default;
};

// mask_ref: 8-bit grayscale PNG, 0 = authentic pixel, 255 = forged pixel,
// same dimensions as the source image.
struct SegmentResponse {
  std::string request_id;
  std::string mask_ref;

  bool operator==(const SegmentResponse&) const = default;
};

// A per-request failure reported by the backend.
struct ErrorResponse {
  std::string request_id;
  std::string message;

  bool operator==(const ErrorResponse&) const = default;
};

using Message = std::variant<Hello, DetectRequest, DetectResponse,
                             SegmentRequest, SegmentResponse, ErrorResponse>;

// Canonical single-line encoding (no trailing newline).
std::string Serialize(const Message& message);

// Throws ProtocolError (with the raw line) on malformed input, including a
// logit array whose length is not 8 or whose entries are not finite.
Message ParseMessage(std::string_view line);

// Capability string advertising how a backend reduces a vocabulary word to a
// single first-token logit, e.g. "token_reduction:first_subtoken".
inline constexpr std::string_view kTokenReductionPrefix = "token_reduction:";

}  // namespace fidl

#endif  // FIDL_PROTOCOL_H_
