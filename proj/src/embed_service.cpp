#include <netdb.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <json.hpp>
#include <thread>

#include "fixseeker/embed.hpp"
#include "fixseeker/error.hpp"

namespace fixseeker {

namespace protocol {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::EmbedderFailure, what); }

json parse_reply(std::string_view payload) {
  json j;
  try {
    j = json::parse(payload);
  } catch (const json::exception& e) {
    fail(std::string("unparseable reply: ") + e.what());
  }
  if (!j.is_object()) fail("reply is not an object");
  if (!j.value("ok", false)) fail("service error: " + j.value("error", std::string("unspecified")));
  return j;
}

std::string string_field(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string()) fail(std::string("reply lacks string field '") + key + "'");
  return it->get<std::string>();
}

std::size_t count_field(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number_unsigned()) fail(std::string("reply lacks count field '") + key + "'");
  return it->get<std::size_t>();
}

}  // namespace

std::string encode_frame(std::string_view payload) {
  return std::to_string(payload.size()) + "\n" + std::string(payload);
}

std::optional<std::string> take_frame(std::string& buffer) {
  const auto nl = buffer.find('\n');
  if (nl == std::string::npos) {
    if (buffer.size() > 20) fail("frame length line too long");
    return std::nullopt;
  }
  if (nl == 0 || nl > 20) fail("bad frame length line");
  std::size_t len = 0;
  for (std::size_t i = 0; i < nl; ++i) {
    if (buffer[i] < '0' || buffer[i] > '9') fail("bad frame length line");
    len = len * 10 + static_cast<std::size_t>(buffer[i] - '0');
  }
  if (buffer.size() - nl - 1 < len) return std::nullopt;
  std::string payload = buffer.substr(nl + 1, len);
  buffer.erase(0, nl + 1 + len);
  return payload;
}

std::string embed_request(const std::vector<std::string>& texts) {
  return json{{"op", "embed"}, {"texts", texts}}.dump();
}

std::string health_request() { return json{{"op", "health"}}.dump(); }

EmbedResponse parse_embed_response(std::string_view payload, std::size_t expected) {
  const json j = parse_reply(payload);
  EmbedResponse r;
  r.model = string_field(j, "model");
  r.revision = string_field(j, "revision");
  const auto it = j.find("vectors");
  if (it == j.end() || !it->is_array()) fail("reply lacks 'vectors'");
  if (it->size() != expected)
    fail("expected " + std::to_string(expected) + " vectors, got " + std::to_string(it->size()));
  r.vectors = Matrix(expected, kFeatureWidth);
  for (std::size_t i = 0; i < expected; ++i) {
    const auto& row = (*it)[i];
    if (!row.is_array() || row.size() != kFeatureWidth)
      fail("vector " + std::to_string(i) + " does not have width " + std::to_string(kFeatureWidth));
    for (std::size_t c = 0; c < kFeatureWidth; ++c) {
      if (!row[c].is_number()) fail("vector " + std::to_string(i) + " holds a non-number");
      const double v = row[c].get<double>();
      if (!std::isfinite(v)) fail("vector " + std::to_string(i) + " holds a non-finite value");
      r.vectors(i, c) = v;
    }
  }
  return r;
}

HealthInfo parse_health_response(std::string_view payload) {
  const json j = parse_reply(payload);
  HealthInfo h;
  h.model = string_field(j, "model");
  h.revision = string_field(j, "revision");
  h.width = count_field(j, "width");
  h.max_seq_len = count_field(j, "max_seq_len");
  return h;
}

}  // namespace protocol

namespace {

class Socket {
 public:
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket() {
    if (fd_ >= 0) ::close(fd_);
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  int fd() const { return fd_; }

 private:
  int fd_;
};

[[noreturn]] void io_fail(const std::string& what) {
  throw Error(ErrorCode::EmbedderFailure, what + ": " + std::strerror(errno));
}

int connect_to(const std::string& address, int timeout_ms) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == address.size())
    throw Error(ErrorCode::InvalidArgument, "embedder address must be host:port, got '" + address + "'");
  const std::string host = address.substr(0, colon), port = address.substr(colon + 1);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (const int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0)
    throw Error(ErrorCode::EmbedderFailure, "cannot resolve " + address + ": " + gai_strerror(rc));
  int fd = -1;
  for (auto* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    timeval tv{timeout_ms / 1000, (timeout_ms % 1000) * 1000};
    ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) io_fail("cannot connect to " + address);
  return fd;
}

}  // namespace

ServiceEmbedder::ServiceEmbedder(ServiceOptions opts) : opts_(std::move(opts)) {
  if (opts_.max_batch == 0) opts_.max_batch = 1;
}

std::string ServiceEmbedder::round_trip(const std::string& request) {
  int delay = opts_.backoff_ms;
  for (int attempt = 0;; ++attempt) {
    try {
      Socket sock(connect_to(opts_.address, opts_.timeout_ms));
      const std::string frame = protocol::encode_frame(request);
      std::size_t sent = 0;
      while (sent < frame.size()) {
        const ssize_t n = ::send(sock.fd(), frame.data() + sent, frame.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
          if (errno == EINTR) continue;
          io_fail("send to " + opts_.address);
        }
        sent += static_cast<std::size_t>(n);
      }
      std::string buffer;
      char chunk[65536];
      while (true) {
        if (auto payload = protocol::take_frame(buffer)) return *payload;
        const ssize_t n = ::recv(sock.fd(), chunk, sizeof chunk, 0);
        if (n < 0) {
          if (errno == EINTR) continue;
          io_fail("receive from " + opts_.address);
        }
        if (n == 0) throw Error(ErrorCode::EmbedderFailure, "connection closed mid-frame");
        buffer.append(chunk, static_cast<std::size_t>(n));
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmbedderFailure || attempt >= opts_.retries) throw;
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
      delay *= 2;
    }
  }
}

protocol::HealthInfo ServiceEmbedder::health() {
  return protocol::parse_health_response(round_trip(protocol::health_request()));
}

Matrix ServiceEmbedder::embed_batch(const std::vector<std::string>& texts) {
  Matrix out(texts.size(), kFeatureWidth);
  for (std::size_t start = 0; start < texts.size(); start += opts_.max_batch) {
    const std::size_t end = std::min(texts.size(), start + opts_.max_batch);
    const std::vector<std::string> chunk(texts.begin() + static_cast<std::ptrdiff_t>(start),
                                         texts.begin() + static_cast<std::ptrdiff_t>(end));
    const auto reply =
        protocol::parse_embed_response(round_trip(protocol::embed_request(chunk)), chunk.size());
    std::copy(reply.vectors.data.begin(), reply.vectors.data.end(), out.row(start));
  }
  return out;
}

}  // namespace fixseeker
