// SPDX-License-Identifier: Apache-2.0
#include "fidl/protocol.h"

#include <cmath>

#include <json.hpp>

#include "fidl/error.h"

namespace fidl {
namespace {

using nlohmann::json;

struct Serializer {
  json operator()(const Hello& m) const {
    json j;
    j["hello"] = m.version;
    if (m.from_backend) {
      j["backend"] = m.backend;
      j["capabilities"] = m.capabilities;
    }
    return j;
  }
  json operator()(const DetectRequest& m) const {
    return {{"type", "detect"},
            {"request_id", m.request_id},
            {"image_ref", m.image_ref},
            {"question", m.question},
            {"decode",
             {{"seed", m.decode.seed}, {"temperature", m.decode.temperature}}}};
  }
  json operator()(const DetectResponse& m) const {
    json logits = json::array();
    for (double v : m.logits) logits.push_back(v);
    return {{"type", "detect_result"},
            {"request_id", m.request_id},
            {"logits", logits}};
  }
  json operator()(const SegmentRequest& m) const {
    return {{"type", "segment"},
            {"request_id", m.request_id},
            {"image_ref", m.image_ref},
            {"question", m.question}};
  }
  json operator()(const SegmentResponse& m) const {
    return {{"type", "segment_result"},
            {"request_id", m.request_id},
            {"mask_ref", m.mask_ref}};
  }
  json operator()(const ErrorResponse& m) const {
    return {{"type", "error"},
            {"request_id", m.request_id},
            {"message", m.message}};
  }
};

class Reader {
 public:
  Reader(const json& j, std::string_view raw) : j_(j), raw_(raw) {}

  [[noreturn]] void Fail(const std::string& why) const {
    throw ProtocolError(why, std::string(raw_));
  }

  std::string String(const char* key) const {
    const auto it = j_.find(key);
    if (it == j_.end() || !it->is_string()) {
      Fail(std::string("missing or non-string '") + key + "'");
    }
    return it->get<std::string>();
  }

  const json& Field(const char* key) const {
    const auto it = j_.find(key);
    if (it == j_.end()) Fail(std::string("missing '") + key + "'");
    return *it;
  }

 private:
  const json& j_;
  std::string_view raw_;
};

}  // namespace

std::string Serialize(const Message& message) {
  return std::visit(Serializer{}, message).dump();
}

Message ParseMessage(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("not JSON: ") + e.what(), std::string(line));
  }
  Reader r(j, line);
  if (!j.is_object()) r.Fail("message must be a JSON object");

  if (j.contains("hello")) {
    Hello h;
    if (!j["hello"].is_number_integer()) r.Fail("hello must be an integer");
    h.version = j["hello"].get<int>();
    if (j.contains("capabilities")) {
      h.from_backend = true;
      const json& caps = j["capabilities"];
      if (!caps.is_array()) r.Fail("capabilities must be a list");
      for (const json& c : caps) {
        if (!c.is_string()) r.Fail("capabilities must be strings");
        h.capabilities.push_back(c.get<std::string>());
      }
      h.backend = j.contains("backend") ? r.String("backend") : "";
    }
    return h;
  }

  const std::string type = r.String("type");
  if (type == "detect") {
    DetectRequest m;
    m.request_id = r.String("request_id");
    m.image_ref = r.String("image_ref");
    m.question = r.String("question");
    const json& decode = r.Field("decode");
    if (!decode.is_object()) r.Fail("decode must be an object");
    if (!decode.contains("seed") || !decode["seed"].is_number_unsigned()) {
      r.Fail("decode.seed must be an unsigned integer");
    }
    if (!decode.contains("temperature") ||
        !decode["temperature"].is_number()) {
      r.Fail("decode.temperature must be a number");
    }
    m.decode.seed = decode["seed"].get<std::uint64_t>();
    m.decode.temperature = decode["temperature"].get<double>();
    if (!(m.decode.temperature > 0.0) || !std::isfinite(m.decode.temperature)) {
      r.Fail("decode.temperature must be positive");
    }
    return m;
  }
  if (type == "detect_result") {
    DetectResponse m;
    m.request_id = r.String("request_id");
    const json& logits = r.Field("logits");
    if (!logits.is_array()) r.Fail("logits must be a list");
    if (logits.size() != DetectionVocab::kSize) {
      r.Fail("expected " + std::to_string(DetectionVocab::kSize) +
             " logits, got " + std::to_string(logits.size()));
    }
    for (std::size_t i = 0; i < logits.size(); ++i) {
      if (!logits[i].is_number()) {
        r.Fail("logit " + std::to_string(i) + " is not a number");
      }
      m.logits[i] = logits[i].get<double>();
      if (!std::isfinite(m.logits[i])) {
        r.Fail("logit " + std::to_string(i) + " is not finite");
      }
    }
    return m;
  }
  if (type == "segment") {
    SegmentRequest m;
    m.request_id = r.String("request_id");
    m.image_ref = r.String("image_ref");
    m.question = r.String("question");
    return m;
  }
  if (type == "segment_result") {
    SegmentResponse m;
    m.request_id = r.String("request_id");
    m.mask_ref = r.String("mask_ref");
    return m;
  }
  if (type == "error") {
    ErrorResponse m;
    m.request_id = r.String("request_id");
    m.message = r.String("message");
    return m;
  }
  r.Fail("unknown message type '" + type + "'");
}

}  // namespace fidl
