// SPDX-License-Identifier: Apache-2.0
#include <arpa/inet.h>
#include <csignal>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <map>
#include <optional>
#include <set>
#include <thread>

#include <json.hpp>

#include "fidl/backend.h"
#include "fidl/error.h"

namespace fidl {
namespace {

void IgnoreSigpipe() {
  static const bool once = [] {
    std::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)once;
}

void WriteAll(int fd, const std::string& data) {
  std::size_t written = 0;
  while (written < data.size()) {
    const ssize_t n = ::write(fd, data.data() + written, data.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorKind::kIo,
                  std::string("write to backend failed: ") + std::strerror(errno));
    }
    written += static_cast<std::size_t>(n);
  }
}

// Blocking line reader for the serving side.
class FdLineReader {
 public:
  explicit FdLineReader(int fd) : fd_(fd) {}

  std::optional<std::string> Next() {
    for (;;) {
      const std::size_t nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      char chunk[4096];
      const ssize_t n = ::read(fd_, chunk, sizeof(chunk));
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        if (buffer_.empty()) return std::nullopt;
        std::string line = std::move(buffer_);
        buffer_.clear();
        return line;
      }
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  int fd_;
  std::string buffer_;
};

std::string ExtractRequestId(std::string_view line) {
  try {
    const auto j = nlohmann::json::parse(line);
    if (j.is_object() && j.contains("request_id") &&
        j["request_id"].is_string()) {
      return j["request_id"].get<std::string>();
    }
  } catch (const std::exception&) {
  }
  return "";
}

template <typename Outcome>
std::string SerializeOutcome(const Outcome& outcome) {
  return std::visit([](const auto& m) { return Serialize(Message(m)); },
                    outcome);
}

const std::string& RequestIdOf(const DetectResponse& m) { return m.request_id; }
const std::string& RequestIdOf(const SegmentResponse& m) { return m.request_id; }

}  // namespace

RemoteBackend::RemoteBackend(int read_fd, int write_fd, int child_pid,
                             RemoteOptions options)
    : read_fd_(read_fd),
      write_fd_(write_fd),
      child_pid_(child_pid),
      options_(options) {
  if (options_.window == 0) options_.window = 1;
}

RemoteBackend::~RemoteBackend() {
  if (write_fd_ >= 0) ::close(write_fd_);
  if (read_fd_ >= 0 && read_fd_ != write_fd_) ::close(read_fd_);
  if (child_pid_ > 0) {
    for (int i = 0; i < 200; ++i) {
      int status = 0;
      const pid_t r = ::waitpid(child_pid_, &status, WNOHANG);
      if (r == child_pid_ || r < 0) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(child_pid_, SIGKILL);
    ::waitpid(child_pid_, nullptr, 0);
  }
}

std::unique_ptr<RemoteBackend> RemoteBackend::Spawn(const std::string& command,
                                                    RemoteOptions options) {
  IgnoreSigpipe();
  int to_child[2];
  int from_child[2];
  if (::pipe2(to_child, O_CLOEXEC) != 0) {
    throw Error(ErrorKind::kIo, "pipe failed");
  }
  if (::pipe2(from_child, O_CLOEXEC) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw Error(ErrorKind::kIo, "pipe failed");
  }
  const pid_t pid = ::fork();
  if (pid < 0) throw Error(ErrorKind::kIo, "fork failed");
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  std::unique_ptr<RemoteBackend> backend(
      new RemoteBackend(from_child[0], to_child[1], pid, options));
  backend->Handshake();
  return backend;
}

std::unique_ptr<RemoteBackend> RemoteBackend::Connect(const std::string& host,
                                                      int port,
                                                      RemoteOptions options) {
  IgnoreSigpipe();
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* result = nullptr;
  const std::string service = std::to_string(port);
  if (::getaddrinfo(host.c_str(), service.c_str(), &hints, &result) != 0) {
    throw Error(ErrorKind::kIo, "cannot resolve " + host);
  }
  int fd = -1;
  for (addrinfo* ai = result; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(result);
  if (fd < 0) {
    throw Error(ErrorKind::kIo, "cannot connect to " + host + ":" + service);
  }
  const int write_fd = ::dup(fd);
  std::unique_ptr<RemoteBackend> backend(
      new RemoteBackend(fd, write_fd, -1, options));
  backend->Handshake();
  return backend;
}

void RemoteBackend::WriteLine(const std::string& line) {
  WriteAll(write_fd_, line + "\n");
}

std::string RemoteBackend::ReadLine(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    const std::size_t nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) {
      throw Error(ErrorKind::kBackendTimeout,
                  "no response within " +
                      std::to_string(timeout.count()) + " ms");
    }
    pollfd pfd{read_fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorKind::kIo, "poll failed");
    }
    if (ready == 0) continue;
    char chunk[4096];
    const ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorKind::kIo, "read from backend failed");
    }
    if (n == 0) throw ProtocolError("backend closed the stream", buffer_);
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

void RemoteBackend::Handshake() {
  WriteLine(Serialize(Hello{}));
  const std::string line = ReadLine(options_.handshake_timeout);
  const Message reply = ParseMessage(line);
  const Hello* hello = std::get_if<Hello>(&reply);
  if (hello == nullptr || !hello->from_backend) {
    throw ProtocolError("expected a hello reply with capabilities", line);
  }
  if (hello->version != kProtocolVersion) {
    throw ProtocolError("unsupported protocol version " +
                            std::to_string(hello->version),
                        line);
  }
  info_.id = hello->backend.empty() ? "remote" : hello->backend;
  info_.capabilities = hello->capabilities;
}

std::string RemoteBackend::token_reduction() const {
  for (const auto& cap : info_.capabilities) {
    if (cap.rfind(kTokenReductionPrefix, 0) == 0) {
      return cap.substr(kTokenReductionPrefix.size());
    }
  }
  return "";
}

template <typename Request, typename Response>
std::vector<std::variant<Response, ErrorResponse>> RemoteBackend::Exchange(
    std::span<const Request> requests) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < requests.size(); ++i) {
    if (!index.emplace(requests[i].request_id, i).second) {
      throw Error(ErrorKind::kProtocol, "duplicate request_id '" +
                                            requests[i].request_id +
                                            "' in one batch");
    }
  }
  std::vector<std::optional<std::variant<Response, ErrorResponse>>> slots(
      requests.size());
  std::set<std::string> in_flight;
  std::size_t next = 0;
  std::size_t done = 0;
  while (done < requests.size()) {
    while (next < requests.size() && in_flight.size() < options_.window) {
      WriteLine(Serialize(Message(requests[next])));
      in_flight.insert(requests[next].request_id);
      ++next;
    }
    const std::string line = ReadLine(options_.timeout);
    Message message = ParseMessage(line);
    std::string id;
    std::variant<Response, ErrorResponse> outcome;
    if (auto* r = std::get_if<Response>(&message)) {
      id = RequestIdOf(*r);
      outcome = std::move(*r);
    } else if (auto* e = std::get_if<ErrorResponse>(&message)) {
      id = e->request_id;
      outcome = std::move(*e);
    } else {
      throw ProtocolError("unexpected message type in response stream", line);
    }
    if (in_flight.erase(id) == 0) {
      throw ProtocolError("response for request_id '" + id +
                              "' which is not in flight",
                          line);
    }
    slots[index.at(id)] = std::move(outcome);
    ++done;
  }
  std::vector<std::variant<Response, ErrorResponse>> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

std::vector<DetectOutcome> RemoteBackend::Detect(
    std::span<const DetectRequest> requests) {
  return Exchange<DetectRequest, DetectResponse>(requests);
}

std::vector<SegmentOutcome> RemoteBackend::Segment(
    std::span<const SegmentRequest> requests) {
  return Exchange<SegmentRequest, SegmentResponse>(requests);
}

std::unique_ptr<Backend> MakeBackend(const std::string& spec,
                                     const std::filesystem::path& mask_dir,
                                     RemoteOptions options) {
  if (spec == "mock") {
    MockConfig config;
    config.mask_dir = mask_dir;
    return std::make_unique<MockBackend>(std::move(config));
  }
  if (spec.rfind("mock:", 0) == 0) {
    MockConfig config = LoadMockConfig(spec.substr(5));
    if (config.mask_dir.empty()) config.mask_dir = mask_dir;
    return std::make_unique<MockBackend>(std::move(config));
  }
  if (spec == "baseline") return std::make_unique<BaselineBackend>(mask_dir);
  if (spec.rfind("tcp://", 0) == 0) {
    const std::string rest = spec.substr(6);
    const std::size_t colon = rest.rfind(':');
    if (colon == std::string::npos) {
      throw Error(ErrorKind::kConfig, "tcp backend needs host:port");
    }
    return RemoteBackend::Connect(rest.substr(0, colon),
                                  std::stoi(rest.substr(colon + 1)), options);
  }
  return RemoteBackend::Spawn(spec, options);
}

std::string HandleLine(Backend& backend, std::string_view line) {
  Message message;
  try {
    message = ParseMessage(line);
  } catch (const ProtocolError& e) {
    return Serialize(ErrorResponse{ExtractRequestId(line), e.what()});
  }
  if (std::holds_alternative<Hello>(message)) {
    Hello reply;
    reply.from_backend = true;
    reply.backend = backend.info().id;
    reply.capabilities = backend.info().capabilities;
    return Serialize(reply);
  }
  try {
    if (const auto* req = std::get_if<DetectRequest>(&message)) {
      const auto out = backend.Detect(std::span(req, 1));
      return SerializeOutcome(out.at(0));
    }
    if (const auto* req = std::get_if<SegmentRequest>(&message)) {
      const auto out = backend.Segment(std::span(req, 1));
      return SerializeOutcome(out.at(0));
    }
  } catch (const std::exception& e) {
    return Serialize(ErrorResponse{ExtractRequestId(line), e.what()});
  }
  return Serialize(ErrorResponse{ExtractRequestId(line),
                                 "protocol: not a request message"});
}

void ServeFd(Backend& backend, int in_fd, int out_fd) {
  IgnoreSigpipe();
  FdLineReader reader(in_fd);
  bool open = false;
  while (auto line = reader.Next()) {
    if (line->find_first_not_of(" \t") == std::string::npos) continue;
    std::string reply;
    if (!open) {
      Message m;
      bool is_hello = false;
      try {
        m = ParseMessage(*line);
        is_hello = std::holds_alternative<Hello>(m);
      } catch (const ProtocolError&) {
      }
      if (is_hello && std::get<Hello>(m).version == kProtocolVersion) {
        open = true;
        reply = HandleLine(backend, *line);
      } else {
        reply = Serialize(ErrorResponse{
            ExtractRequestId(*line),
            "protocol: handshake required: send {\"hello\":1} first"});
      }
    } else {
      reply = HandleLine(backend, *line);
    }
    try {
      WriteAll(out_fd, reply + "\n");
    } catch (const Error&) {
      return;
    }
  }
}

void ServeTcp(Backend& backend, int port, int max_sessions,
              const std::function<void(int)>& on_listening) {
  IgnoreSigpipe();
  const int listener = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (listener < 0) throw Error(ErrorKind::kIo, "socket failed");
  const int yes = 1;
  ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(listener, 4) != 0) {
    ::close(listener);
    throw Error(ErrorKind::kIo, "cannot listen on port " + std::to_string(port));
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &len);
  if (on_listening) on_listening(ntohs(addr.sin_port));
  for (int served = 0; max_sessions == 0 || served < max_sessions; ++served) {
    const int conn = ::accept(listener, nullptr, nullptr);
    if (conn < 0) {
      if (errno == EINTR) {
        --served;
        continue;
      }
      break;
    }
    ServeFd(backend, conn, conn);
    ::close(conn);
  }
  ::close(listener);
}

}  // namespace fidl
