/*
 * Copyright 2026 The editshap Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Client for external scorers speaking the JSON-lines bridge protocol.
//
//   request:  {"id": 7, "pairs": [{"src": "...", "hyp": "..."}, ...]}
//   response: {"id": 7, "scores": [0.12, ...]}
//   failure:  {"id": 7, "error": "..."}
//
// One JSON object per line, over a child process's stdio or a TCP socket.

#pragma once

#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <memory>
#include <mutex>
#include <regex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "editshap/core.hpp"
#include "editshap/scorer.hpp"

extern char** environ;

namespace editshap {

class TransportError : public Error {
  using Error::Error;
};

// Bidirectional line channel.
class LineTransport {
 public:
  virtual ~LineTransport() = default;
  virtual void open() = 0;
  virtual void close() = 0;
  virtual bool is_open() const = 0;
  virtual void write_line(const std::string& line) = 0;
  virtual std::string read_line() = 0;
  virtual std::string describe() const = 0;
};

namespace external_detail {

// Buffered line I/O over a connected stream socket.
class SocketChannel {
 public:
  SocketChannel() = default;
  SocketChannel(const SocketChannel&) = delete;
  SocketChannel& operator=(const SocketChannel&) = delete;
  ~SocketChannel() { reset(); }

  void attach(int fd) {
    reset();
    fd_ = fd;
  }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
    buffer_.clear();
  }
  bool valid() const { return fd_ >= 0; }

  void write_line(const std::string& line) {
    if (fd_ < 0) throw TransportError("channel is closed");
    std::string data = line + "\n";
    std::size_t sent = 0;
    while (sent < data.size()) {
      ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("send failed: ") + std::strerror(errno));
      }
      sent += static_cast<std::size_t>(n);
    }
  }

  std::string read_line(std::chrono::milliseconds timeout) {
    if (fd_ < 0) throw TransportError("channel is closed");
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
      auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) throw TransportError("timed out waiting for response");
      pollfd pfd{fd_, POLLIN, 0};
      int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (rc < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("poll failed: ") + std::strerror(errno));
      }
      if (rc == 0) continue;
      char chunk[4096];
      ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("recv failed: ") + std::strerror(errno));
      }
      if (n == 0) throw TransportError("connection closed by peer");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  int fd_ = -1;
  std::string buffer_;
};

}  // namespace external_detail

// Spawns `/bin/sh -c command` with its stdin and stdout on one end of a
// socket pair.
class ProcessTransport final : public LineTransport {
 public:
  explicit ProcessTransport(std::string command,
                            std::chrono::milliseconds timeout = std::chrono::seconds(120))
      : command_(std::move(command)), timeout_(timeout) {}
  ~ProcessTransport() override { close(); }

  void open() override {
    close();
    int sv[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) {
      throw TransportError(std::string("socketpair failed: ") + std::strerror(errno));
    }
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, sv[1], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, sv[1], STDOUT_FILENO);
    const char* argv[] = {"/bin/sh", "-c", command_.c_str(), nullptr};
    pid_t pid = -1;
    int rc = ::posix_spawn(&pid, "/bin/sh", &actions, nullptr,
                           const_cast<char* const*>(argv), environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(sv[1]);
    if (rc != 0) {
      ::close(sv[0]);
      throw TransportError("cannot spawn '" + command_ + "': " + std::strerror(rc));
    }
    pid_ = pid;
    channel_.attach(sv[0]);
  }

  void close() override {
    channel_.reset();
    if (pid_ > 0) {
      int status = 0;
      // The child sees EOF on stdin; give it a moment before terminating it.
      for (int i = 0; i < 50; ++i) {
        if (::waitpid(pid_, &status, WNOHANG) == pid_) {
          pid_ = -1;
          return;
        }
        ::usleep(2000);
      }
      ::kill(pid_, SIGTERM);
      ::waitpid(pid_, &status, 0);
      pid_ = -1;
    }
  }

  bool is_open() const override { return channel_.valid(); }
  void write_line(const std::string& line) override { channel_.write_line(line); }
  std::string read_line() override { return channel_.read_line(timeout_); }
  std::string describe() const override { return "process '" + command_ + "'"; }

 private:
  std::string command_;
  std::chrono::milliseconds timeout_;
  pid_t pid_ = -1;
  external_detail::SocketChannel channel_;
};

class TcpTransport final : public LineTransport {
 public:
  TcpTransport(std::string host, std::string port,
               std::chrono::milliseconds timeout = std::chrono::seconds(120))
      : host_(std::move(host)), port_(std::move(port)), timeout_(timeout) {}

  void open() override {
    close();
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    int rc = ::getaddrinfo(host_.c_str(), port_.c_str(), &hints, &res);
    if (rc != 0) throw TransportError("cannot resolve " + describe() + ": " + gai_strerror(rc));
    std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(res, ::freeaddrinfo);
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
      int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
        channel_.attach(fd);
        return;
      }
      ::close(fd);
    }
    throw TransportError("cannot connect to " + describe());
  }

  void close() override { channel_.reset(); }
  bool is_open() const override { return channel_.valid(); }
  void write_line(const std::string& line) override { channel_.write_line(line); }
  std::string read_line() override { return channel_.read_line(timeout_); }
  std::string describe() const override { return "tcp " + host_ + ":" + port_; }

 private:
  std::string host_;
  std::string port_;
  std::chrono::milliseconds timeout_;
  external_detail::SocketChannel channel_;
};

// "host:port" connects over TCP; anything else is run as a shell command.
inline std::unique_ptr<LineTransport> make_transport(const std::string& target) {
  static const std::regex host_port(R"(^([A-Za-z0-9._-]+):([0-9]{1,5})$)");
  std::smatch m;
  if (std::regex_match(target, m, host_port)) {
    return std::make_unique<TcpTransport>(m[1].str(), m[2].str());
  }
  return std::make_unique<ProcessTransport>(target);
}

// Scorer backed by a bridge process. Requests are serialized: at most one
// batch is in flight.
class ExternalScorerClient final : public Scorer {
 public:
  struct Options {
    std::size_t max_batch = 32;
  };

  explicit ExternalScorerClient(std::unique_ptr<LineTransport> transport)
      : ExternalScorerClient(std::move(transport), Options{}) {}
  ExternalScorerClient(std::unique_ptr<LineTransport> transport, Options options)
      : transport_(std::move(transport)), options_(options) {
    if (options_.max_batch == 0) throw Error("max_batch must be positive");
  }

  double score(const Sentence& source, const Sentence& hypothesis) const override {
    SentencePair pair{source, hypothesis};
    return batch_score(std::span<const SentencePair>(&pair, 1)).front();
  }

  std::vector<double> batch_score(std::span<const SentencePair> pairs) const override {
    std::lock_guard lock(mutex_);
    std::vector<double> out;
    out.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); i += options_.max_batch) {
      auto chunk = pairs.subspan(i, std::min(options_.max_batch, pairs.size() - i));
      auto scores = request(chunk);
      out.insert(out.end(), scores.begin(), scores.end());
    }
    return out;
  }

  std::string name() const override { return "external"; }

  // Number of request lines written, including retries.
  std::uint64_t requests_sent() const { return requests_sent_; }

 private:
  std::string exchange(const std::string& line) const {
    if (!transport_->is_open()) transport_->open();
    transport_->write_line(line);
    ++requests_sent_;
    return transport_->read_line();
  }

  std::vector<double> request(std::span<const SentencePair> chunk) const {
    const std::int64_t id = next_id_++;
    nlohmann::json req;
    req["id"] = id;
    req["pairs"] = nlohmann::json::array();
    for (const auto& p : chunk) {
      req["pairs"].push_back({{"src", p.source.str()}, {"hyp", p.hypothesis.str()}});
    }
    const std::string line = req.dump();

    std::string reply;
    try {
      reply = exchange(line);
    } catch (const TransportError&) {
      // One retry on a fresh connection.
      try {
        transport_->close();
        reply = exchange(line);
      } catch (const TransportError& e) {
        transport_->close();
        throw BridgeUnavailableError(transport_->describe() + " unavailable: " + e.what());
      }
    }
    return decode(reply, id, chunk.size());
  }

  static std::vector<double> decode(const std::string& reply, std::int64_t id,
                                    std::size_t expected) {
    nlohmann::json resp;
    try {
      resp = nlohmann::json::parse(reply);
    } catch (const nlohmann::json::exception&) {
      throw ProtocolError("malformed response line: " + reply.substr(0, 200));
    }
    if (!resp.is_object() || !resp.contains("id") || !resp["id"].is_number_integer()) {
      throw ProtocolError("response without integer id");
    }
    if (resp["id"].get<std::int64_t>() != id) {
      throw ProtocolError("response id " + resp["id"].dump() + " does not match request id " +
                          std::to_string(id));
    }
    if (resp.contains("error")) {
      throw ScorerError("bridge error: " + resp["error"].dump());
    }
    if (!resp.contains("scores") || !resp["scores"].is_array()) {
      throw ProtocolError("response without scores array");
    }
    const auto& scores = resp["scores"];
    if (scores.size() != expected) {
      throw ScoreLengthMismatchError("expected " + std::to_string(expected) + " scores, got " +
                                     std::to_string(scores.size()));
    }
    std::vector<double> out;
    out.reserve(expected);
    for (const auto& s : scores) {
      if (!s.is_number()) throw ProtocolError("non-numeric score " + s.dump());
      out.push_back(s.get<double>());
    }
    return out;
  }

  std::unique_ptr<LineTransport> transport_;
  Options options_;
  mutable std::mutex mutex_;
  mutable std::int64_t next_id_ = 0;
  mutable std::uint64_t requests_sent_ = 0;
};

}  // namespace editshap
