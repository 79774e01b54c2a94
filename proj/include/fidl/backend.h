// SPDX-License-Identifier: Apache-2.0
#ifndef FIDL_BACKEND_H_
#define FIDL_BACKEND_H_

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fidl/image.h"
#include "fidl/protocol.h"

namespace fidl {

struct BackendInfo {
  std::string id;
  std::vector<std::string> capabilities;
};

using DetectOutcome = std::variant<DetectResponse, ErrorResponse>;
using SegmentOutcome = std::variant<SegmentResponse, ErrorResponse>;

// Anything that answers detect/segment requests. Outcomes come back in
// request order. Per-request failures are ErrorResponse entries; a failure of
// the backend as a whole (timeout, protocol violation, dead process) throws.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual const BackendInfo& info() const = 0;
  virtual std::vector<DetectOutcome> Detect(
      std::span<const DetectRequest> requests) = 0;
  virtual std::vector<SegmentOutcome> Segment(
      std::span<const SegmentRequest> requests) = 0;
};

// Logits whose constrained score is exactly sigmoid(x): every positive word
// gets log sigmoid(x), every negative word log sigmoid(-x). Finite for any
// finite x.
LogitVector::Values LogitsForLogOdds(double x);

// Logits for a configured score s in [0, 1]: ln s on positives, ln(1 - s) on
// negatives, floored at kLogitFloor so that 0 and 1 stay finite (and still
// score exactly 0 and 1). Throws Error(kConfig) outside [0, 1].
inline constexpr double kLogitFloor = -1000.0;
LogitVector::Values LogitsForScore(double s_tamper);

struct MockConfig {
  std::map<std::string, double> scores;       // request_id -> s_tamper
  std::map<std::string, std::string> masks;   // request_id -> mask path
  double default_score = 0.5;
  // Where empty masks are written for ids without a configured mask.
  std::filesystem::path mask_dir;
};

// JSON: {"scores": {...}, "masks": {...}, "default_score": 0.5,
//        "mask_dir": "..."}; relative mask paths resolve against the file.
MockConfig LoadMockConfig(const std::filesystem::path& path);

// Deterministic table-driven backend. Ignores decode parameters.
class MockBackend : public Backend {
 public:
  explicit MockBackend(MockConfig config);

  const BackendInfo& info() const override { return info_; }
  std::vector<DetectOutcome> Detect(
      std::span<const DetectRequest> requests) override;
  std::vector<SegmentOutcome> Segment(
      std::span<const SegmentRequest> requests) override;

 private:
  MockConfig config_;
  BackendInfo info_;
};

// Residual-energy detector. energy = mean |I - box3x3(I)| over pixels and
// channels (clamp-to-edge, intensity units); the log-odds are
// kGain * (energy / kCalibration - 1), so a flat image sits at
// sigmoid(-kGain). Masks mark pixels whose 5x5-averaged residual exceeds
// kCalibration.
class BaselineBackend : public Backend {
 public:
  static constexpr double kCalibration = 4.0;
  static constexpr double kGain = 4.0;

  explicit BaselineBackend(std::filesystem::path mask_dir = {});

  const BackendInfo& info() const override { return info_; }
  std::vector<DetectOutcome> Detect(
      std::span<const DetectRequest> requests) override;
  std::vector<SegmentOutcome> Segment(
      std::span<const SegmentRequest> requests) override;

  static double ResidualEnergy(const ImageBuffer& image);
  static double LogOdds(const ImageBuffer& image);
  static Grid<std::uint8_t> ResidualMask(const ImageBuffer& image);

 private:
  std::filesystem::path mask_dir_;
  BackendInfo info_;
};

struct RemoteOptions {
  std::chrono::milliseconds timeout{60000};            // per response
  std::chrono::milliseconds handshake_timeout{60000};  // hello reply
  std::size_t window = 16;                   // max in-flight requests
};

// Out-of-process backend speaking the line protocol over a pair of file
// descriptors (subprocess pipes or a TCP socket). The handshake runs in the
// constructor.
class RemoteBackend : public Backend {
 public:
  // Runs `command` through /bin/sh -c with stdin/stdout piped.
  static std::unique_ptr<RemoteBackend> Spawn(const std::string& command,
                                              RemoteOptions options = {});
  // Connects to host:port.
  static std::unique_ptr<RemoteBackend> Connect(const std::string& host,
                                                int port,
                                                RemoteOptions options = {});
  ~RemoteBackend() override;

  const BackendInfo& info() const override { return info_; }
  std::vector<DetectOutcome> Detect(
      std::span<const DetectRequest> requests) override;
  std::vector<SegmentOutcome> Segment(
      std::span<const SegmentRequest> requests) override;

  // Backend-declared token reduction convention, or "" if none was declared.
  std::string token_reduction() const;

 private:
  RemoteBackend(int read_fd, int write_fd, int child_pid,
                RemoteOptions options);

  void Handshake();
  void WriteLine(const std::string& line);
  std::string ReadLine(std::chrono::milliseconds timeout);

  template <typename Request, typename Response>
  std::vector<std::variant<Response, ErrorResponse>> Exchange(
      std::span<const Request> requests);

  int read_fd_;
  int write_fd_;
  int child_pid_;
  RemoteOptions options_;
  std::string buffer_;
  BackendInfo info_;
};

// Builds a backend from a CLI spec: "mock", "mock:<config.json>",
// "baseline", "tcp://host:port", or otherwise a shell command to spawn.
std::unique_ptr<Backend> MakeBackend(const std::string& spec,
                                     const std::filesystem::path& mask_dir,
                                     RemoteOptions options = {});

// Serves `backend` over the line protocol until EOF. Malformed lines get an
// ErrorResponse and the session continues.
void ServeFd(Backend& backend, int in_fd, int out_fd);
// Handles one post-handshake line; exposed for tests.
std::string HandleLine(Backend& backend, std::string_view line);
// Accepts loopback connections on `port` (0 picks a free port) one at a
// time, serving each until EOF. Returns after `max_sessions` sessions
// (0 = forever). `on_listening` receives the bound port.
void ServeTcp(Backend& backend, int port, int max_sessions = 0,
              const std::function<void(int)>& on_listening = {});

}  // namespace fidl

#endif  // FIDL_BACKEND_H_
