/* Copyright 2026 The LWA Toolkit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "lwa/backend.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <istream>
#include <ostream>

#include <httplib.h>

#include "lwa/error.hpp"
#include "lwa/raster_io.hpp"
#include "lwa/sim2real.hpp"

namespace lwa {

namespace fs = std::filesystem;
using nlohmann::json;

json EditRequest::to_json() const {
  return {{"id", id},
          {"op", "edit"},
          {"packed", packed.string()},
          {"mask", mask.string()},
          {"instruction", instruction},
          {"depth_norm", {{"d_max", d_max}}},
          {"panel", {{"h", panel.height}, {"w", panel.width}}}};
}

EditRequest EditRequest::from_json(const json& j) {
  if (j.at("op").get<std::string>() != "edit") {
    throw Error(ErrorCode::kProtocol, "unsupported op " + j.at("op").dump());
  }
  EditRequest r;
  r.id = j.at("id").get<std::string>();
  r.packed = j.at("packed").get<std::string>();
  r.mask = j.at("mask").get<std::string>();
  r.instruction = j.at("instruction").get<std::string>();
  r.d_max = j.at("depth_norm").at("d_max").get<double>();
  r.panel = PixelDomain::make(j.at("panel").at("h").get<std::int64_t>(),
                              j.at("panel").at("w").get<std::int64_t>());
  if (!(r.d_max > 0.0)) throw Error(ErrorCode::kProtocol, "d_max must be > 0");
  return r;
}

json EditResponse::to_json() const {
  json j = {{"id", id ? json(*id) : json(nullptr)}, {"status", ok ? "ok" : "error"}};
  if (ok) j["packed_out"] = packed_out.string();
  if (!message.empty()) j["message"] = message;
  return j;
}

EditResponse EditResponse::from_json(const json& j) {
  EditResponse r;
  const json& id = j.at("id");
  if (!id.is_null()) r.id = id.get<std::string>();
  const std::string status = j.at("status").get<std::string>();
  if (status != "ok" && status != "error") {
    throw Error(ErrorCode::kProtocol, "unknown status '" + status + "'");
  }
  r.ok = status == "ok";
  if (r.ok) r.packed_out = j.at("packed_out").get<std::string>();
  if (j.contains("message") && j["message"].is_string()) r.message = j["message"];
  return r;
}

BackendConfig parse_backend_spec(const std::string& spec, std::chrono::milliseconds timeout) {
  BackendConfig c;
  c.timeout = timeout;
  if (spec.rfind("http://", 0) == 0) {
    c.transport = Transport::kHttp;
    c.endpoint = spec;
  } else if (spec.rfind("stdio:", 0) == 0) {
    c.transport = Transport::kStdio;
    c.endpoint = spec.substr(6);
  } else {
    c.transport = Transport::kStdio;
    c.endpoint = spec;
  }
  if (c.endpoint.empty()) throw Error(ErrorCode::kInvalidArgument, "empty backend endpoint");
  return c;
}

namespace {

class SubprocessTransport final : public BackendTransport {
 public:
  explicit SubprocessTransport(const std::string& command) {
    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0 || ::pipe(from_child) != 0) {
      throw Error(ErrorCode::kIo, "pipe() failed: " + std::string(std::strerror(errno)));
    }
    pid_ = ::fork();
    if (pid_ < 0) throw Error(ErrorCode::kIo, "fork() failed");
    if (pid_ == 0) {
      ::setpgid(0, 0);
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::setpgid(pid_, pid_);
    ::close(to_child[0]);
    ::close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    ::fcntl(write_fd_, F_SETFD, FD_CLOEXEC);
    ::fcntl(read_fd_, F_SETFD, FD_CLOEXEC);
    ::signal(SIGPIPE, SIG_IGN);
  }

  ~SubprocessTransport() override {
    if (write_fd_ >= 0) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    if (pid_ > 0) {
      // The child exits on stdin EOF; give it a moment before killing.
      for (int i = 0; i < 50; ++i) {
        if (::waitpid(pid_, nullptr, WNOHANG) == pid_) return;
        ::usleep(10000);
      }
      ::kill(-pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
    }
  }

  std::string roundtrip(const std::string& line, std::chrono::milliseconds timeout) override {
    std::string out = line + "\n";
    std::size_t sent = 0;
    while (sent < out.size()) {
      const ssize_t n = ::write(write_fd_, out.data() + sent, out.size() - sent);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorCode::kProtocol, "backend process closed its input");
      }
      sent += static_cast<std::size_t>(n);
    }
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
      const auto nl = pending_.find('\n');
      if (nl != std::string::npos) {
        std::string reply = pending_.substr(0, nl);
        pending_.erase(0, nl + 1);
        return reply;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) throw Error(ErrorCode::kTimeout, "backend did not reply in time");
      pollfd pfd{read_fd_, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (ready < 0 && errno == EINTR) continue;
      if (ready == 0) throw Error(ErrorCode::kTimeout, "backend did not reply in time");
      char buf[4096];
      const ssize_t n = ::read(read_fd_, buf, sizeof buf);
      if (n <= 0) throw Error(ErrorCode::kProtocol, "backend process exited");
      pending_.append(buf, static_cast<std::size_t>(n));
    }
  }

 private:
  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  std::string pending_;
};

class HttpTransport final : public BackendTransport {
 public:
  explicit HttpTransport(const std::string& url) : url_(url) {}

  std::string roundtrip(const std::string& line, std::chrono::milliseconds timeout) override {
    httplib::Client client(url_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    auto res = client.Post("/edit", line, "application/json");
    if (!res) {
      if (res.error() == httplib::Error::Read || res.error() == httplib::Error::ConnectionTimeout) {
        throw Error(ErrorCode::kTimeout, "backend at " + url_ + " timed out");
      }
      throw Error(ErrorCode::kProtocol,
                  "backend at " + url_ + " unreachable: " + httplib::to_string(res.error()));
    }
    return res->body;
  }

 private:
  std::string url_;
};

class FunctionTransport final : public BackendTransport {
 public:
  explicit FunctionTransport(std::function<std::string(const std::string&)> fn)
      : fn_(std::move(fn)) {}
  std::string roundtrip(const std::string& line, std::chrono::milliseconds) override {
    return fn_(line);
  }

 private:
  std::function<std::string(const std::string&)> fn_;
};

std::unique_ptr<BackendTransport> make_transport(const BackendConfig& config) {
  switch (config.transport) {
    case Transport::kStdio: return std::make_unique<SubprocessTransport>(config.endpoint);
    case Transport::kHttp: return std::make_unique<HttpTransport>(config.endpoint);
    case Transport::kInProcess: break;
  }
  throw Error(ErrorCode::kInvalidArgument, "in-process backends need a serve function");
}

}  // namespace

BackendHandle::BackendHandle(BackendConfig config)
    : BackendHandle(config, make_transport(config), config.endpoint) {}

BackendHandle::BackendHandle(BackendConfig config, std::unique_ptr<BackendTransport> transport,
                             std::string identity)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      identity_(std::move(identity)),
      mutex_(std::make_unique<std::mutex>()) {}

BackendHandle BackendHandle::in_process(std::function<std::string(const std::string&)> serve,
                                        std::string identity) {
  BackendConfig c;
  c.transport = Transport::kInProcess;
  c.endpoint = identity;
  return BackendHandle(c, std::make_unique<FunctionTransport>(std::move(serve)),
                       std::move(identity));
}

BackendHandle::BackendHandle(BackendHandle&&) noexcept = default;
BackendHandle& BackendHandle::operator=(BackendHandle&&) noexcept = default;
BackendHandle::~BackendHandle() = default;

EditResponse BackendHandle::edit(const EditRequest& request) {
  std::lock_guard lock(*mutex_);
  const std::string reply = transport_->roundtrip(request.to_json().dump(), config_.timeout);
  EditResponse response;
  try {
    response = EditResponse::from_json(json::parse(reply));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProtocol, std::string("malformed backend reply: ") + e.what());
  }
  if (!response.id || *response.id != request.id) {
    throw Error(ErrorCode::kProtocol, "backend reply id does not match request " + request.id);
  }
  if (!response.ok) {
    throw Error(ErrorCode::kProtocol, "backend reported an error: " + response.message);
  }
  return response;
}

std::string mock_backend_reply(const std::string& line, const MockBackendConfig& config) {
  EditResponse response;
  json parsed;
  try {
    parsed = json::parse(line);
  } catch (const json::exception& e) {
    response.message = std::string("malformed JSON: ") + e.what();
    return response.to_json().dump();
  }
  if (parsed.is_object() && parsed.contains("id") && parsed["id"].is_string()) {
    response.id = parsed["id"].get<std::string>();
  }
  try {
    const EditRequest request = EditRequest::from_json(parsed);
    fs::path out = request.packed;
    out += ".out.lwa1";
    if (config.mode == MockMode::kIdentity) {
      write_file_atomic(out, read_file(request.packed));
    } else {
      PackedImage image = load_packed(request.packed);
      const VisibilityMask mask = load_mask(request.mask);
      if (!(mask.domain() == request.panel) ||
          !(image.domain == PixelDomain{2 * request.panel.height, request.panel.width})) {
        throw Error(ErrorCode::kDimensionMismatch, "mask or image does not match panel");
      }
      const std::uint8_t code = quantize_depth(config.fill_depth, true, request.d_max);
      const Eigen::Index n = request.panel.pixels();
      for (Eigen::Index p = 0; p < n; ++p) {
        if (!mask.at_pixel(p)) continue;
        image.rgb.row(p).setConstant(code);
        image.rgb.row(n + p) << config.fill_color[0], config.fill_color[1],
            config.fill_color[2];
      }
      save_packed(out, image);
    }
    response.ok = true;
    response.packed_out = out;
  } catch (const std::exception& e) {
    response.ok = false;
    response.message = e.what();
  }
  return response.to_json().dump();
}

void serve_mock_stdio(std::istream& in, std::ostream& out, const MockBackendConfig& config) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out << mock_backend_reply(line, config) << '\n';
    out.flush();
  }
}

void serve_mock_http(const std::string& host, int port, const MockBackendConfig& config) {
  httplib::Server server;
  std::mutex one_at_a_time;
  server.Post("/edit", [&](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard lock(one_at_a_time);
    res.set_content(mock_backend_reply(req.body, config), "application/json");
  });
  if (!server.listen(host, port)) {
    throw Error(ErrorCode::kIo, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

}  // namespace lwa
